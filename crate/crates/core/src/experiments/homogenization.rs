use crate::config::{ExperimentConfig, RunConfig};
use crate::dynamics::{simulate_paths, InitialCondition, PathOptions};
use crate::error::{GleError, Result};
use crate::estimators::{green_kubo, msd_diffusion, velocity_autocorrelation, GreenKuboOptions, MsdOptions};
use crate::model::{kernel_mass, DomainKind};
use crate::spectral::{assemble_generator, diffusion_from_poisson, solve_poisson, PoissonOptions, SpectralBasis};

use super::report::ExperimentReport;

/// Relative tolerance of the Monte Carlo routes against the free-case formula.
pub const FREE_MC_TOL: f64 = 0.05;
/// Absolute tolerance of the spectral route against the free-case formula.
pub const FREE_SPECTRAL_TOL: f64 = 1e-8;
/// Relative agreement required between Monte Carlo and spectral `D`.
pub const MC_SPECTRAL_TOL: f64 = 0.10;

/// Effective diffusion by mean squared displacement, Green–Kubo and (for `d = 1`) the Poisson equation.
pub fn run_homogenization(cfg: &RunConfig) -> Result<ExperimentReport> {
    let cfg = cfg.for_kind("homogenization")?;
    let Some(ExperimentConfig::Homogenization { msd_window, gk_horizon }) = &cfg.experiment else {
        unreachable!("for_kind fills the block")
    };
    let model = cfg.model()?;
    if model.domain_kind != DomainKind::Torus {
        return Err(GleError::Precondition("homogenization needs a periodic model".into()));
    }
    let n = &cfg.numerics;
    let mut rep = ExperimentReport::new("homogenization", &cfg, &model.fingerprint());
    let gamma = kernel_mass(&model);
    let bound = 4.0 / model.beta * model.lambda.iter().zip(&model.alpha).map(|(l, a)| a / (l * l)).sum::<f64>();
    rep.value("gamma", gamma);
    rep.value("upper_bound", bound);
    rep.target(
        "D",
        None,
        Some(&format!("0 < D <= {bound}")),
        "variational upper bound (4/beta) * sum(alpha_j / lambda_j^2) on the effective diffusion",
    );

    let trajs = simulate_paths(
        &model,
        n.scheme(),
        n.horizon,
        n.replicas,
        cfg.seed,
        &InitialCondition::Gibbs,
        PathOptions {
            stride: n.stride,
            max_total_steps: cfg.budget.max_total_steps,
        },
    )?;
    let msd = msd_diffusion(
        &trajs,
        &MsdOptions {
            window: msd_window.map(|[a, b]| (a, b)),
            ..Default::default()
        },
    )?;
    let gk = green_kubo(
        &trajs,
        &GreenKuboOptions {
            horizon: *gk_horizon,
            ..Default::default()
        },
    )?;
    let dt_store = trajs[0].times[1] - trajs[0].times[0];
    let lags = ((trajs[0].len() / 4).min((20.0 / dt_store) as usize)).max(2);
    let vacf = velocity_autocorrelation(&trajs, lags)?;
    rep.series(
        "vacf",
        &["lag", "c"],
        vacf.iter().enumerate().map(|(k, &c)| vec![k as f64 * dt_store, c]).collect(),
    );
    drop(trajs);
    rep.estimate("d_msd", msd.clone());
    rep.estimate("d_green_kubo", gk.clone());

    let spectral = if model.d == 1 {
        let [nq, np, nz] = n.basis;
        let basis = SpectralBasis::with_budget(&model, nq, np, nz, cfg.budget.max_spectral_dim)?;
        let l = assemble_generator(&model, &basis)?;
        let sol = solve_poisson(&l, &basis, &basis.momentum_power(1)?, PoissonOptions::default())?;
        let d = diffusion_from_poisson(&sol, &basis, &model)?;
        rep.value("d_spectral", d.d);
        rep.value("d_spectral_pairing", d.d_pairing);
        rep.value("poisson_relative_residual", sol.relative_residual);
        rep.value("poisson_iterations", sol.iterations as f64);
        Some(d.d)
    } else {
        rep.note("d > 1: spectral cross-check skipped, Monte Carlo routes only");
        None
    };

    let d_ref = spectral.unwrap_or(msd.value);
    rep.verdict(
        3,
        "diffusion bound",
        d_ref > 0.0 && d_ref <= bound,
        d_ref,
        &format!("0 < D <= {bound}"),
        format!(
            "{} D = {d_ref}",
            if spectral.is_some() { "spectral" } else { "MSD" }
        ),
    );

    if model.potential.is_zero() {
        let exact = 1.0 / (model.beta * gamma);
        rep.target("D", Some(exact), None, "free particle: D = 1 / (beta * sum(lambda_j^2 / alpha_j))");
        for (name, e) in [("MSD", &msd), ("Green-Kubo", &gk)] {
            let err = e.relative_error(exact);
            rep.verdict(
                1,
                &format!("free-case {name} diffusion"),
                err <= FREE_MC_TOL,
                err,
                &format!("relative error <= {FREE_MC_TOL}"),
                format!("{name} D = {} [{}, {}], exact {exact}", e.value, e.lo, e.hi),
            );
        }
        if let Some(d) = spectral {
            let err = (d - exact).abs();
            rep.verdict(
                1,
                "free-case spectral diffusion",
                err <= FREE_SPECTRAL_TOL,
                err,
                &format!("absolute error <= {FREE_SPECTRAL_TOL:e}"),
                format!("spectral D = {d}, exact {exact}"),
            );
        }
    } else if let Some(d) = spectral {
        for (name, e) in [("MSD", &msd), ("Green-Kubo", &gk)] {
            let err = e.relative_error(d);
            rep.verdict(
                3,
                &format!("{name} agrees with spectral diffusion"),
                err <= MC_SPECTRAL_TOL,
                err,
                &format!("relative difference <= {MC_SPECTRAL_TOL}"),
                format!("{name} D = {} [{}, {}], spectral {d}", e.value, e.lo, e.hi),
            );
        }
    }
    Ok(rep)
}

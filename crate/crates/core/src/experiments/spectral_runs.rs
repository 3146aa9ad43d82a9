//! Poisson, Lyapunov and plain simulation runs.

use crate::config::{ExperimentConfig, InitialLaw, RunConfig};
use crate::dynamics::{export_trajectories, simulate_paths, InitialCondition, PathOptions, StreamKind};
use crate::equilibrium::{
    drift_proposal, fit_confining_spec, lyapunov_drift_check, symbolic_drift_residual, GibbsSampler, LyapunovSpec,
};
use crate::error::{GleError, Result};
use crate::model::{kernel_mass, DomainKind, State};
use crate::spectral::{assemble_generator, diffusion_from_poisson, solve_poisson, PoissonOptions, SpectralBasis};
use crate::stats::{mean, variance};

use super::report::ExperimentReport;

/// Spectral effective diffusion with a coarser basis as a refinement check.
pub fn run_poisson(cfg: &RunConfig) -> Result<ExperimentReport> {
    let cfg = cfg.for_kind("poisson")?;
    let model = cfg.model()?;
    if model.d != 1 || model.domain_kind != DomainKind::Torus {
        return Err(GleError::Unsupported("Poisson route needs a periodic model with d = 1".into()));
    }
    let mut rep = ExperimentReport::new("poisson", &cfg, &model.fingerprint());
    let [nq, np, nz] = cfg.numerics.basis;
    let mut d_values = Vec::new();
    let mut last = None;
    for (label, dims) in [("coarse", [nq * 3 / 4, np * 3 / 4, nz * 3 / 4]), ("fine", [nq, np, nz])] {
        let basis = SpectralBasis::with_budget(&model, dims[0], dims[1], dims[2], cfg.budget.max_spectral_dim)?;
        let l = assemble_generator(&model, &basis)?;
        let sol = solve_poisson(&l, &basis, &basis.momentum_power(1)?, PoissonOptions::default())?;
        let d = diffusion_from_poisson(&sol, &basis, &model)?;
        rep.value(&format!("d_{label}"), d.d);
        rep.value(&format!("d_pairing_{label}"), d.d_pairing);
        rep.value(&format!("residual_{label}"), sol.relative_residual);
        d_values.push(d.d);
        if label == "fine" {
            rep.series(
                "poisson_solution",
                &["index", "coefficient"],
                sol.phi.iter().enumerate().map(|(i, &c)| vec![i as f64, c]).collect(),
            );
        }
        last = Some(d);
    }
    let d = last.expect("two levels");
    rep.value("refinement_change", (d_values[1] - d_values[0]).abs() / d_values[1].abs());
    rep.target("D", None, Some(&format!("0 < D <= {}", d.upper_bound)), "variational upper bound (4/beta) * sum(alpha_j / lambda_j^2)");
    rep.verdict(
        3,
        "diffusion bound",
        d.bound_holds,
        d.d,
        &format!("0 < D <= {}", d.upper_bound),
        format!("pairing form {}", d.d_pairing),
    );
    if model.potential.is_zero() {
        let exact = 1.0 / (model.beta * kernel_mass(&model));
        let err = (d.d - exact).abs();
        rep.verdict(1, "free-case spectral diffusion", err <= 1e-8, err, "absolute error <= 1e-8", format!("exact {exact}"));
    }
    Ok(rep)
}

/// Drift inequality `LG ≤ −aG + d̂` on sampled points plus the symbolic oracle for `LG`.
pub fn run_lyapunov(cfg: &RunConfig) -> Result<ExperimentReport> {
    let cfg = cfg.for_kind("lyapunov")?;
    let Some(ExperimentConfig::Lyapunov { points, radius }) = &cfg.experiment else {
        unreachable!("for_kind fills the block")
    };
    let model = cfg.model()?;
    let mut rep = ExperimentReport::new("lyapunov", &cfg, &model.fingerprint());
    let spec = match model.domain_kind {
        DomainKind::Torus => LyapunovSpec::torus_reference(),
        DomainKind::Confining => fit_confining_spec(&model)?,
    };
    rep.parameters["lyapunov_spec"] = serde_json::to_value(&spec).expect("serializes");
    let pts = drift_proposal(&model, *points, *radius, cfg.seed);
    let drift = lyapunov_drift_check(&model, &spec, &pts)?;
    rep.value("d_hat", drift.d_hat);
    rep.value("min_g", drift.min_g);
    rep.value("fitted_radius", drift.fitted_radius);
    rep.series(
        "drift_bins",
        &["r_lo", "r_hi", "count", "max_drift"],
        drift
            .bins
            .iter()
            .map(|b| vec![b.r_lo, b.r_hi, b.count as f64, b.max_drift])
            .collect(),
    );
    rep.verdict(
        8,
        "LG + aG bounded with non-increasing radial maxima",
        drift.passed,
        drift.d_hat,
        "finite maximum; maxima non-increasing from a fitted bin <= 15 of 20",
        format!("fitted radius {}, {} points", drift.fitted_radius, drift.n_points),
    );
    if model.d == 1 {
        let oracle = pts.iter().take(2000).cloned().collect::<Vec<_>>();
        match symbolic_drift_residual(&model, &spec, &oracle) {
            Ok(res) => rep.verdict(
                8,
                "closed-form LG matches the symbolic generator",
                res <= 1e-12,
                res,
                "<= 1e-12",
                format!("{} points", oracle.len()),
            ),
            Err(e) => rep.note(format!("symbolic oracle skipped: {e}")),
        }
    }
    Ok(rep)
}

/// Plain trajectory generation with a trajectory export attached.
pub fn run_simulate(cfg: &RunConfig) -> Result<ExperimentReport> {
    let cfg = cfg.for_kind("simulate")?;
    let Some(ExperimentConfig::Simulate { initial, export_stride }) = &cfg.experiment else {
        unreachable!("for_kind fills the block")
    };
    let model = cfg.model()?;
    let n = &cfg.numerics;
    let mut rep = ExperimentReport::new("simulate", &cfg, &model.fingerprint());
    let init = match initial {
        InitialLaw::Gibbs => InitialCondition::Gibbs,
        InitialLaw::ShiftedGibbs { shift } => {
            let sampler = GibbsSampler::new(&model)?;
            InitialCondition::Custom(
                (0..n.replicas as u64)
                    .map(|i| {
                        let mut s = sampler.draw_indexed(cfg.seed, i, StreamKind::Initial).0;
                        s.q.iter_mut().for_each(|q| *q += shift);
                        s.wrap(model.domain_kind);
                        s
                    })
                    .collect(),
            )
        }
        InitialLaw::Point { q, p } => {
            let mut s = State::zeros(model.d, model.m);
            s.q.clone_from(q);
            s.p.clone_from(p);
            InitialCondition::Point(s)
        }
    };
    let trajs = simulate_paths(
        &model,
        n.scheme(),
        n.horizon,
        n.replicas,
        cfg.seed,
        &init,
        PathOptions {
            stride: n.stride,
            max_total_steps: cfg.budget.max_total_steps,
        },
    )?;
    let mut buf = Vec::new();
    export_trajectories(&mut buf, &trajs, *export_stride, &cfg.hash())?;
    rep.attachments.push(("trajectories.csv".into(), buf));
    rep.value("replicas", trajs.len() as f64);
    rep.value("stored_states_per_replica", trajs[0].len() as f64);

    let finite = trajs.iter().all(|t| t.validate().is_ok());
    if matches!(initial, InitialLaw::Gibbs) {
        // final-time kinetic energy against its Gibbs value
        let p2: Vec<f64> = trajs
            .iter()
            .map(|t| t.states.last().expect("non-empty").p.iter().map(|x| x * x).sum::<f64>() / model.d as f64)
            .collect();
        let se = (variance(&p2) / p2.len() as f64).sqrt().max(1e-300);
        let z = (mean(&p2) - 1.0 / model.beta).abs() / se;
        rep.verdict(
            9,
            "final kinetic energy consistent with the Gibbs law",
            finite && z <= 5.0,
            z,
            "<= 5 standard errors, all states finite",
            format!("mean p^2 {} over {} replicas", mean(&p2), p2.len()),
        );
    } else {
        rep.verdict(9, "trajectories finite and inside the domain", finite, if finite { 0.0 } else { 1.0 }, "all states valid", String::new());
    }
    Ok(rep)
}

use rayon::prelude::*;

use crate::config::{ExperimentConfig, RunConfig};
use crate::dynamics::{
    rescale_whitenoise, simulate_langevin, simulate_paths, step_count, InitialCondition, IntegratorScheme,
    LangevinSystem, LimitNoise, NoisePath, PathOptions, StreamKind, Trajectory,
};
use crate::equilibrium::{BootstrapOptions, GibbsSampler};
use crate::error::{GleError, Result};
use crate::estimators::{strong_error, sup_discrepancies};
use crate::model::kernel_mass;
use crate::stats::{fit_line, mean};

use super::checks::friction_formula_check;
use super::report::ExperimentReport;

/// Accepted range for the fitted order of the root-mean-square sup error.
pub const ORDER_RANGE: (f64, f64) = (0.3, 0.7);
/// Stored points per path; the sup is taken over this grid.
const STORED_POINTS: u64 = 500;

fn check_epsilons(eps: &[f64]) -> Result<Vec<f64>> {
    if eps.len() < 3 {
        return Err(GleError::Precondition(format!(
            "need ≥ 3 epsilon values for a slope, got {}",
            eps.len()
        )));
    }
    let mut e = eps.to_vec();
    e.sort_by(|a, b| b.partial_cmp(a).expect("validated finite"));
    let ratio = e[1] / e[0];
    for w in e.windows(2) {
        let r = w[1] / w[0];
        if !(r < 1.0) || (r / ratio - 1.0).abs() > 1e-6 {
            return Err(GleError::Precondition(
                "epsilon values must be distinct and geometrically spaced".into(),
            ));
        }
    }
    Ok(e)
}

/// Strong convergence of the rescaled GLE to its Langevin limit under coupled noise.
pub fn run_whitenoise(cfg: &RunConfig) -> Result<ExperimentReport> {
    let cfg = cfg.for_kind("whitenoise")?;
    let Some(ExperimentConfig::Whitenoise { epsilons, r, horizon, dt_ratio }) = &cfg.experiment else {
        unreachable!("for_kind fills the block")
    };
    let eps = check_epsilons(epsilons)?;
    let model = cfg.model()?;
    let mut rep = ExperimentReport::new("whitenoise", &cfg, &model.fingerprint());
    let n_rep = cfg.numerics.replicas;
    let seed = cfg.seed;

    // friction of the limit, for this model and for random parameter sets
    let gamma = kernel_mass(&model);
    rep.value("gamma", gamma);
    rep.target("gamma", Some(gamma), None, "friction of the limit equation: sum(lambda_j^2 / alpha_j)");
    let mut worst_limit: f64 = 0.0;
    for &e in &eps {
        let limit = LangevinSystem::limit_of(&rescale_whitenoise(&model, e)?);
        worst_limit = worst_limit.max((limit.gamma - gamma).abs() / gamma);
    }
    let fc = friction_formula_check(&model, 10, seed)?;
    rep.value("friction_exact_residual", fc.exact_residual);
    rep.value("friction_green_kubo_residual", fc.green_kubo_residual);
    rep.verdict(
        2,
        "limit friction equals sum(lambda^2/alpha)",
        worst_limit <= 1e-12 && fc.passed,
        worst_limit.max(fc.exact_residual).max(fc.green_kubo_residual),
        "relative residual <= 1e-12",
        format!(
            "rescaled limits {worst_limit:e}; {} random sets: exact {:e}, Green-Kubo {:e}",
            fc.sets, fc.exact_residual, fc.green_kubo_residual
        ),
    );

    // same (q, p) for every epsilon; z drawn from the stationary law of its mode
    let sampler = GibbsSampler::new(&model)?;
    let starts: Vec<_> = (0..n_rep as u64)
        .map(|i| sampler.draw_indexed(seed, i, StreamKind::Initial).0)
        .collect();

    let mut rows = Vec::new();
    let mut rms = Vec::new();
    let mut err_r2 = Vec::new();
    let mut rms_q = Vec::new();
    for &e in &eps {
        let m_eps = rescale_whitenoise(&model, e)?;
        let dt = dt_ratio * e;
        let scheme = IntegratorScheme::euler_maruyama(dt);
        let steps = step_count(*horizon, dt)?;
        let stride = (steps / STORED_POINTS).max(1) as usize;
        let budget = cfg.budget.max_total_steps / 2;
        let gle = simulate_paths(
            &m_eps,
            scheme,
            *horizon,
            n_rep,
            seed,
            &InitialCondition::Custom(starts.clone()),
            PathOptions {
                stride,
                max_total_steps: budget,
            },
        )?;
        let system = LangevinSystem::limit_of(&m_eps);
        let width = m_eps.m * m_eps.d;
        let limit: Vec<_> = (0..n_rep)
            .into_par_iter()
            .map(|i| {
                let noise = LimitNoise::Coupled {
                    lambda: m_eps.lambda.clone(),
                    alpha: m_eps.alpha.clone(),
                    path: NoisePath::new(seed, i as u64, StreamKind::Dynamics, dt, width),
                };
                simulate_langevin(&system, scheme, *horizon, &starts[i].q, &starts[i].p, &noise, stride)
            })
            .collect::<Result<_>>()?;
        let mut row = vec![e];
        for (k, &rr) in r.iter().enumerate() {
            let est = strong_error(
                &gle,
                &limit,
                rr,
                BootstrapOptions {
                    seed: seed ^ 0x5eed ^ k as u64,
                    ..Default::default()
                },
            )?;
            row.extend([est.value, est.lo, est.hi]);
            rep.estimate(&format!("strong_error_r{rr}_eps{e}"), est);
        }
        let sq = sup_discrepancies(&gle, &limit, 2.0)?;
        let m2 = mean(&sq);
        err_r2.push(m2);
        rms.push(m2.sqrt());
        rms_q.push(mean(&sup_position_gaps(&gle, &limit)).sqrt());
        row.push(m2.sqrt());
        rows.push(row);
    }
    let mut header = vec!["epsilon".to_string()];
    for rr in r {
        header.extend([format!("err_r{rr}"), format!("err_r{rr}_lo"), format!("err_r{rr}_hi")]);
    }
    header.push("rms_sup".into());
    let header_ref: Vec<&str> = header.iter().map(String::as_str).collect();
    rep.series("strong_error", &header_ref, rows);

    let decreasing = err_r2.windows(2).all(|w| w[1] < w[0]);
    rep.verdict(
        6,
        "strong error (r = 2) strictly decreasing in epsilon",
        decreasing,
        err_r2.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max),
        "successive ratio < 1",
        format!("errors {err_r2:?} for epsilon {eps:?}"),
    );
    let x: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let y: Vec<f64> = rms.iter().map(|v| v.ln()).collect();
    let fit = fit_line(&x, &y, None);
    rep.value("rms_order", fit.slope);
    rep.value("rms_order_se", fit.slope_se);
    let fit_q = fit_line(&x, &rms_q.iter().map(|v| v.ln()).collect::<Vec<_>>(), None);
    rep.value("rms_order_q_only", fit_q.slope);
    rep.note(format!(
        "the sup error adds |dq|^2 and |dp|^2; positions alone converge faster (order {:.3})",
        fit_q.slope
    ));
    rep.target(
        "rms_order",
        Some(0.5),
        Some("[0.3, 0.7]"),
        "Gronwall bound of order epsilon^(r/2) on the coupled error suggests order 1/2",
    );
    rep.verdict(
        6,
        "fitted order of the root-mean-square sup error",
        fit.slope >= ORDER_RANGE.0 && fit.slope <= ORDER_RANGE.1,
        fit.slope,
        "in [0.3, 0.7]",
        format!("log-log slope {} ± {} over {} epsilons", fit.slope, fit.slope_se, eps.len()),
    );
    Ok(rep)
}

/// `sup_t |Δq|²` per coupled replica pair; paths are matched by replica id.
fn sup_position_gaps(a: &[Trajectory], b: &[Trajectory]) -> Vec<f64> {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            debug_assert_eq!(x.replica_id, y.replica_id);
            (0..x.len())
                .map(|k| (0..x.dim()).map(|i| (x.lifted(k, i) - y.lifted(k, i)).powi(2)).sum::<f64>())
                .fold(0.0, f64::max)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsilon_grid_rules() {
        assert!(check_epsilons(&[0.1]).unwrap_err().to_string().contains("need ≥ 3 epsilon values"));
        assert!(check_epsilons(&[0.1, 0.05, 0.02]).is_err());
        assert_eq!(check_epsilons(&[0.025, 0.1, 0.05]).unwrap(), vec![0.1, 0.05, 0.025]);
    }
}

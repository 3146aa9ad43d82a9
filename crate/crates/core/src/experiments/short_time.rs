use crate::config::{ExperimentConfig, RunConfig};
use crate::error::{GleError, Result};
use crate::spectral::{
    assemble_adjoint, assemble_generator, derivative_ops, derivative_operator_norm, random_smooth_state,
    short_time_scan, SpectralBasis,
};
use crate::stats::fit_line;
use crate::symbolic::commutator_table;

use super::report::ExperimentReport;

/// Allowed distance of each fitted exponent from `−(1 + 2k)/2`.
pub const EXPONENT_TOL: f64 = 0.35;
/// Smallest basis for which the exponent verdicts are meaningful.
pub const MIN_BASIS: [usize; 3] = [16, 16, 8];

/// Small-time blow-up of `‖C_k e^{−tL}u0‖` for `k = 0, 1, 2` over random initial data.
pub fn run_short_time(cfg: &RunConfig) -> Result<ExperimentReport> {
    let cfg = cfg.for_kind("short_time")?;
    let Some(ExperimentConfig::ShortTime { initial_data, times, t_min }) = &cfg.experiment else {
        unreachable!("for_kind fills the block")
    };
    let model = cfg.model()?;
    if model.d != 1 {
        return Err(GleError::Unsupported("short-time scan needs d = 1".into()));
    }
    let mut rep = ExperimentReport::new("short_time", &cfg, &model.fingerprint());

    let table = commutator_table();
    let held = table.iter().filter(|c| c.holds).count();
    rep.verdict(
        4,
        "commutator preflight",
        held == table.len(),
        (table.len() - held) as f64,
        "all identities exact",
        format!("{held} of {} hold", table.len()),
    );
    if held != table.len() {
        rep.note("preflight failed; scan skipped");
        return Ok(rep);
    }

    let [nq, np, nz] = cfg.numerics.basis;
    if nq < MIN_BASIS[0] || np < MIN_BASIS[1] || nz < MIN_BASIS[2] {
        rep.note(format!("basis {:?} is below the recommended {:?}", cfg.numerics.basis, MIN_BASIS));
    }
    let basis = SpectralBasis::with_budget(&model, nq, np, nz, cfg.budget.max_spectral_dim)?;
    let l = assemble_generator(&model, &basis)?;
    let ops = derivative_ops(&model, &basis)?;
    let grid: Vec<f64> = (0..*times)
        .map(|i| t_min * (1.0 / t_min).powf(i as f64 / (*times - 1) as f64))
        .collect();

    let mut worst = [0.0f64; 3];
    let mut worst_slope = [0.0f64; 3];
    let mut ordered = true;
    let mut rows = Vec::new();
    for i in 0..*initial_data {
        let u0 = random_smooth_state(&basis, cfg.seed.wrapping_add(i as u64));
        let scan = short_time_scan(&l, &ops, &basis, &u0, &grid)?;
        let dev = scan.deviations();
        for k in 0..3 {
            if dev[k] >= worst[k] {
                worst[k] = dev[k];
                worst_slope[k] = scan.slopes[k];
            }
        }
        ordered &= scan.slopes[0] > scan.slopes[1] && scan.slopes[1] > scan.slopes[2];
        let (w0, w1) = scan.window.unwrap_or((f64::NAN, f64::NAN));
        rows.push(vec![i as f64, scan.slopes[0], scan.slopes[1], scan.slopes[2], w0, w1, scan.window_points as f64]);
        if i == 0 {
            let series: Vec<Vec<f64>> = (0..scan.times.len())
                .map(|j| {
                    let mut r = vec![scan.times[j]];
                    r.extend((0..3).map(|k| scan.norms[k][j]));
                    r.extend((0..3).map(|k| scan.tail_errors[k][j]));
                    r
                })
                .collect();
            rep.series("short_time_norms", &["t", "n0", "n1", "n2", "tail0", "tail1", "tail2"], series);
        }
    }
    rep.series("short_time_slopes", &["initial", "slope0", "slope1", "slope2", "t_lo", "t_hi", "points"], rows);
    for k in 0..3 {
        let target = -(1.0 + 2.0 * k as f64) / 2.0;
        rep.target(&format!("exponent_{k}"), Some(target), None, "small-time blow-up exponent -(1 + 2k)/2 of derivative bounds");
        rep.verdict(
            5,
            &format!("short-time exponent k = {k}"),
            worst[k] <= EXPONENT_TOL,
            worst_slope[k],
            &format!("within {EXPONENT_TOL} of {target}"),
            format!("worst deviation {} over {} initial data", worst[k], initial_data),
        );
    }
    rep.verdict(
        5,
        "exponents ordered in k",
        ordered,
        if ordered { 0.0 } else { 1.0 },
        "slope_0 > slope_1 > slope_2 for every initial datum",
        String::new(),
    );

    // operator-norm diagnostic: the sup over data rather than a fixed datum
    let l_adj = assemble_adjoint(&model, &basis)?;
    let diag_t: Vec<f64> = (0..6).map(|i| 0.05 * 10f64.powf(i as f64 / 5.0)).collect();
    let mut diag_rows = Vec::new();
    let mut logs = [Vec::new(), Vec::new(), Vec::new()];
    for &t in &diag_t {
        let mut row = vec![t];
        for k in 0..3 {
            let n = derivative_operator_norm(&l, &l_adj, ops.get(k), &basis, t, 30, cfg.seed ^ 0x0b)?;
            logs[k].push(n.ln());
            row.push(n);
        }
        diag_rows.push(row);
    }
    let lt: Vec<f64> = diag_t.iter().map(|t| t.ln()).collect();
    for k in 0..3 {
        rep.value(&format!("operator_norm_slope_{k}"), fit_line(&lt, &logs[k], None).slope);
    }
    rep.series("short_time_operator_norms", &["t", "norm0", "norm1", "norm2"], diag_rows);
    Ok(rep)
}

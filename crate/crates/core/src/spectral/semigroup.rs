//! Action of `e^{−tL}` and the short-time derivative scan.

use serde::Serialize;

use super::assemble::{DerivativeOps, OperatorMatrix};
use super::basis::SpectralBasis;
use crate::dynamics::{stream_id, GaussianStream, StreamKind};
use crate::error::{GleError, Result};
use crate::linalg::{expm_neg_apply, norm2, KrylovOptions, LinearOperator};
use crate::stats::fit_line;

pub const SEMIGROUP_TOL: f64 = 1e-9;

/// `e^{−tL} u0` by Krylov projection at relative tolerance `1e-9`.
pub fn semigroup_apply(l: &OperatorMatrix, u0: &[f64], t: f64) -> Result<Vec<f64>> {
    if !(t >= 0.0) {
        return Err(GleError::Precondition(format!("t must be ≥ 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(u0.to_vec());
    }
    let opts = KrylovOptions {
        tol: SEMIGROUP_TOL,
        ..KrylovOptions::default()
    };
    Ok(expm_neg_apply(l, u0, t, opts)?.result)
}

/// Evaluates `e^{−tL} u0` on an increasing time grid, stepping between grid points.
pub fn semigroup_series(l: &OperatorMatrix, u0: &[f64], times: &[f64]) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(times.len());
    let mut u = u0.to_vec();
    let mut t_prev = 0.0;
    for &t in times {
        if t < t_prev {
            return Err(GleError::Precondition("times must be non-decreasing".into()));
        }
        u = semigroup_apply(l, &u, t - t_prev)?;
        t_prev = t;
        out.push(u.clone());
    }
    Ok(out)
}

/// Random mean-zero, unit-norm coefficients with Gaussian decay in every degree,
/// so that the tail mass is far below `1e-6`.
pub fn random_smooth_state(basis: &SpectralBasis, seed: u64) -> Vec<f64> {
    let mut s = GaussianStream::new(seed, stream_id(0, StreamKind::Initial), 2);
    let width = |n: usize| (n as f64 / 6.0).max(0.75);
    let (wq, wp, wz) = (width(basis.q.n_q), width(basis.n_p), width(basis.n_z));
    let mut u: Vec<f64> = (0..basis.dim())
        .map(|idx| {
            let mi = basis.multi_index(idx);
            let mut e = (basis.q.degree(mi[0]) as f64 / wq).powi(2) + (mi[1] as f64 / wp).powi(2);
            e += mi[2..].iter().map(|&n| (n as f64 / wz).powi(2)).sum::<f64>();
            s.normal() * (-0.5 * e).exp()
        })
        .collect();
    u[0] = 0.0;
    let n = norm2(&u);
    u.iter_mut().for_each(|v| *v /= n);
    u
}

#[derive(Debug, Clone, Serialize)]
pub struct ShortTimeScan {
    pub times: Vec<f64>,
    /// `‖C_k e^{−tL}u0‖ / ‖u0‖` for `k = 0, 1, 2`.
    pub norms: [Vec<f64>; 3],
    /// Share of each norm carried by the outer modes of `e^{−tL}u0`.
    pub tail_errors: [Vec<f64>; 3],
    pub window: Option<(f64, f64)>,
    pub window_points: usize,
    pub slopes: [f64; 3],
    pub targets: [f64; 3],
    pub degenerate: bool,
}

impl ShortTimeScan {
    pub fn deviations(&self) -> [f64; 3] {
        [0, 1, 2].map(|k| (self.slopes[k] - self.targets[k]).abs())
    }
}

fn tail_part(basis: &SpectralBasis, u: &[f64]) -> Vec<f64> {
    let cut = |n: usize| (3 * n).div_ceil(4).max(1);
    let (cq, cp, cz) = (cut(basis.q.n_q), cut(basis.n_p), cut(basis.n_z));
    u.iter()
        .enumerate()
        .map(|(idx, &c)| {
            let mi = basis.multi_index(idx);
            if basis.q.degree(mi[0]) > cq || mi[1] > cp || mi[2..].iter().any(|&n| n > cz) {
                c
            } else {
                0.0
            }
        })
        .collect()
}

/// Fits `log ‖C_k e^{−tL}u0‖` against `log t` on `[t_min, 0.5]`, where `t_min` is
/// the first time at which every tail error is below 1% and every norm exceeds
/// ten times the solver tolerance.
pub fn short_time_scan(
    l: &OperatorMatrix,
    ops: &DerivativeOps,
    basis: &SpectralBasis,
    u0: &[f64],
    times: &[f64],
) -> Result<ShortTimeScan> {
    l.check_basis(basis)?;
    if times.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
        return Err(GleError::Precondition("scan times must lie in (0, 1]".into()));
    }
    let targets = [-0.5, -1.5, -2.5];
    let n0 = norm2(u0);
    let mut centered = u0.to_vec();
    centered[0] = 0.0;
    if n0 == 0.0 || norm2(&centered) <= 1e-14 * n0 {
        return Ok(ShortTimeScan {
            times: times.to_vec(),
            norms: [0, 1, 2].map(|_| vec![0.0; times.len()]),
            tail_errors: [0, 1, 2].map(|_| vec![0.0; times.len()]),
            window: None,
            window_points: 0,
            slopes: [f64::NAN; 3],
            targets,
            degenerate: true,
        });
    }
    if basis.mean(u0).abs() > 1e-12 * n0 {
        return Err(GleError::Precondition("u0 must have zero ρ-mean".into()));
    }
    let tail = basis.tail_mass(u0);
    if tail >= 1e-6 {
        return Err(GleError::Precondition(format!("u0 is not resolved: tail mass {tail:e}")));
    }
    let series = semigroup_series(l, u0, times)?;
    let mut norms: [Vec<f64>; 3] = Default::default();
    let mut tails: [Vec<f64>; 3] = Default::default();
    for u in &series {
        let ut = tail_part(basis, u);
        for k in 0..3 {
            let op = ops.get(k);
            let full = norm2(&op.apply_vec(u)) / n0;
            let tl = norm2(&op.matrix.apply_vec(&ut)) / n0;
            norms[k].push(full);
            tails[k].push(if full > 0.0 { tl / full } else { 0.0 });
        }
    }
    let floor = 10.0 * SEMIGROUP_TOL;
    let ok = |i: usize| (0..3).all(|k| tails[k][i] < 0.01 && norms[k][i] > floor);
    let first = (0..times.len()).find(|&i| ok(i));
    let idx: Vec<usize> = match first {
        Some(f) => (f..times.len()).filter(|&i| times[i] <= 0.5 && ok(i)).collect(),
        None => Vec::new(),
    };
    if idx.len() < 5 {
        return Err(GleError::Estimator(format!(
            "short-time window has {} usable points, need at least 5",
            idx.len()
        )));
    }
    let x: Vec<f64> = idx.iter().map(|&i| times[i].ln()).collect();
    let slopes = [0, 1, 2].map(|k| {
        let y: Vec<f64> = idx.iter().map(|&i| norms[k][i].ln()).collect();
        fit_line(&x, &y, None).slope
    });
    Ok(ShortTimeScan {
        times: times.to_vec(),
        norms,
        tail_errors: tails,
        window: Some((times[idx[0]], times[*idx.last().unwrap()])),
        window_points: idx.len(),
        slopes,
        targets,
        degenerate: false,
    })
}

/// Largest singular value of `C_k e^{−tL}` by power iteration on its normal operator.
/// `l_adj` must be the matrix transpose of `l`.
pub fn derivative_operator_norm(
    l: &OperatorMatrix,
    l_adj: &OperatorMatrix,
    op: &OperatorMatrix,
    basis: &SpectralBasis,
    t: f64,
    iterations: usize,
    seed: u64,
) -> Result<f64> {
    let mut v = random_smooth_state(basis, seed);
    let mut sigma = 0.0;
    let opt = op.matrix.transpose();
    for _ in 0..iterations {
        let w = semigroup_apply(l, &v, t)?;
        let cw = op.apply_vec(&w);
        sigma = norm2(&cw);
        let back = semigroup_apply(l_adj, &opt.apply_vec(&cw), t)?;
        let n = norm2(&back);
        if n == 0.0 {
            return Ok(0.0);
        }
        v = back.into_iter().map(|x| x / n).collect();
        v[0] = 0.0;
    }
    Ok(sigma)
}

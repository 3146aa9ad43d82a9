use rayon::prelude::*;

use super::correlation::{autocorrelation, mean_squared_displacement};
use crate::dynamics::Trajectory;
use crate::equilibrium::BootstrapOptions;
use crate::error::{GleError, Result};
use crate::stats::{bootstrap_indices, fit_line, percentile_interval, EstimateWithCI};

/// Checks a replica set shares one uniform time grid; returns the spacing.
pub(crate) fn common_grid(trajs: &[Trajectory]) -> Result<f64> {
    let first = trajs
        .first()
        .ok_or_else(|| GleError::Precondition("no trajectories".into()))?;
    first.validate()?;
    if first.len() < 3 {
        return Err(GleError::Precondition("trajectories need at least 3 samples".into()));
    }
    let dt = first.times[1] - first.times[0];
    let scale = first.times.last().unwrap().abs().max(1.0);
    if first.times.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * scale) {
        return Err(GleError::Precondition("sampling grid must be uniform".into()));
    }
    for t in &trajs[1..] {
        t.validate()?;
        if t.times.len() != first.times.len() || t.dim() != first.dim() {
            return Err(GleError::Dimension("replicas have different lengths or dimensions".into()));
        }
        if (t.times[0] - first.times[0]).abs() > 1e-12 * scale {
            return Err(GleError::Precondition("replicas start at different times".into()));
        }
    }
    Ok(dt)
}

pub(crate) fn mean_curve(curves: &[Vec<f64>], idx: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; curves[0].len()];
    for &i in idx {
        for (o, v) in out.iter_mut().zip(&curves[i]) {
            *o += v;
        }
    }
    out.iter_mut().for_each(|v| *v /= idx.len() as f64);
    out
}

/// Pooled velocity autocorrelation of the stored momenta, lags `0..max_lag`.
pub fn velocity_autocorrelation(trajs: &[Trajectory], max_lag: usize) -> Result<Vec<f64>> {
    common_grid(trajs)?;
    let curves = replica_vacf(trajs, max_lag);
    let all: Vec<usize> = (0..curves.len()).collect();
    Ok(mean_curve(&curves, &all))
}

pub(crate) fn replica_vacf(trajs: &[Trajectory], max_lag: usize) -> Vec<Vec<f64>> {
    trajs
        .par_iter()
        .map(|t| {
            let d = t.dim();
            let mut acc = vec![0.0; max_lag.min(t.len())];
            for i in 0..d {
                let p: Vec<f64> = t.states.iter().map(|s| s.p[i]).collect();
                for (a, c) in acc.iter_mut().zip(autocorrelation(&p, max_lag)) {
                    *a += c / d as f64;
                }
            }
            acc
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub struct MsdOptions {
    /// Fit window in time units. By default it runs from the lag `k` at which the velocity
    /// autocorrelation first drops below 5% to `10k`.
    pub window: Option<(f64, f64)>,
    /// Largest lag as a fraction of the trajectory length.
    pub max_lag_fraction: f64,
    pub bootstrap: BootstrapOptions,
}

impl Default for MsdOptions {
    fn default() -> Self {
        MsdOptions {
            window: None,
            max_lag_fraction: 0.25,
            bootstrap: BootstrapOptions::default(),
        }
    }
}

/// Minimum `R²` and maximum relative change between half-window slopes.
pub const MSD_MIN_R2: f64 = 0.95;
pub const MSD_MAX_SLOPE_DRIFT: f64 = 0.25;

/// Effective diffusion from the slope of the mean squared displacement, `D = slope / 2`
/// per coordinate. Time-origin averaging within each replica, bootstrap over replicas.
pub fn msd_diffusion(trajs: &[Trajectory], opts: &MsdOptions) -> Result<EstimateWithCI> {
    let dt = common_grid(trajs)?;
    let n = trajs[0].len();
    let max_lag = ((n as f64 * opts.max_lag_fraction) as usize).clamp(3, n);
    let (t0, t1) = match opts.window {
        Some(w) => w,
        None => {
            let c = velocity_autocorrelation(trajs, max_lag)?;
            let k = c.iter().position(|v| v.abs() < 0.05 * c[0]).ok_or_else(|| {
                GleError::Estimator(
                    "velocity autocorrelation never falls below 5% of its initial value; window too early".into(),
                )
            })?;
            (k as f64 * dt, ((10 * k.max(1)).min(max_lag - 1)) as f64 * dt)
        }
    };
    if !(t1 > t0 && t0 >= 0.0) {
        return Err(GleError::Precondition(format!("invalid MSD window ({t0}, {t1})")));
    }
    let k0 = (t0 / dt).round() as usize;
    let k1 = ((t1 / dt).round() as usize).min(max_lag - 1);
    if k1 < k0 + 9 {
        return Err(GleError::Estimator(format!(
            "MSD window [{t0}, {t1}] holds fewer than 10 lags; trajectories too short"
        )));
    }
    // thin to at most 400 lags, keeping the endpoints
    let step = ((k1 - k0) / 400).max(1);
    let lags: Vec<usize> = (k0..=k1).step_by(step).collect();
    let x: Vec<f64> = lags.iter().map(|&k| k as f64 * dt).collect();
    let curves: Vec<Vec<f64>> = trajs
        .par_iter()
        .map(|t| {
            let d = t.dim();
            let mut acc = vec![0.0; lags.len()];
            for i in 0..d {
                let q: Vec<f64> = (0..t.len()).map(|k| t.lifted(k, i)).collect();
                let m = mean_squared_displacement(&q, k1 + 1);
                for (a, &k) in acc.iter_mut().zip(&lags) {
                    *a += m[k] / d as f64;
                }
            }
            acc
        })
        .collect();
    let all: Vec<usize> = (0..curves.len()).collect();
    let y = mean_curve(&curves, &all);
    let fit = fit_line(&x, &y, None);
    let h = x.len() / 2;
    let s1 = fit_line(&x[..h], &y[..h], None).slope;
    let s2 = fit_line(&x[h..], &y[h..], None).slope;
    let drift = if s1 != 0.0 { (s2 / s1 - 1.0).abs() } else { f64::INFINITY };
    if fit.r2 < MSD_MIN_R2 || drift > MSD_MAX_SLOPE_DRIFT {
        return Err(GleError::Estimator(format!(
            "MSD is not linear on [{t0}, {t1}] (R² = {:.4}, half-window slope change {:.3}); window too early",
            fit.r2, drift
        )));
    }
    let value = 0.5 * fit.slope;
    let boots = bootstrap_indices(curves.len(), opts.bootstrap.resamples, opts.bootstrap.seed, &|idx| {
        0.5 * fit_line(&x, &mean_curve(&curves, idx), None).slope
    });
    let (lo, hi) = percentile_interval(&boots, 0.95);
    Ok(EstimateWithCI::new(value, lo, hi, "msd", trajs.len()).with_window((x[0], *x.last().unwrap())))
}

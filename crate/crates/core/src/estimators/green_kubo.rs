use nalgebra::DMatrix;

use super::msd::{common_grid, mean_curve, replica_vacf};
use crate::dynamics::Trajectory;
use crate::equilibrium::BootstrapOptions;
use crate::error::{GleError, Result};
use crate::model::GleModel;
use crate::stats::{bootstrap_indices, fit_line, percentile_interval, EstimateWithCI};

#[derive(Debug, Clone, Copy)]
pub struct GreenKuboOptions {
    /// Lag horizon in time units; defaults to twenty times the lag at which the
    /// correlogram first drops below 5% of `C(0)`, capped at a quarter of the trajectory.
    pub horizon: Option<f64>,
    pub bootstrap: BootstrapOptions,
}

impl Default for GreenKuboOptions {
    fn default() -> Self {
        GreenKuboOptions {
            horizon: None,
            bootstrap: BootstrapOptions::default(),
        }
    }
}

/// Trapezoid integral of a correlogram plus an exponential tail fitted to the
/// last tenth of the lags. The tail is dropped when that segment changes sign,
/// since it is then indistinguishable from noise.
fn integrate(c: &[f64], dt: f64) -> f64 {
    let n = c.len();
    let mut s = 0.5 * (c[0] + c[n - 1]);
    s += c[1..n - 1].iter().sum::<f64>();
    s *= dt;
    let k0 = n - (n / 10).max(3).min(n - 1);
    let seg = &c[k0..];
    let same_sign = seg.iter().all(|&v| v > 0.0) || seg.iter().all(|&v| v < 0.0);
    if same_sign {
        let x: Vec<f64> = (k0..n).map(|k| k as f64 * dt).collect();
        let y: Vec<f64> = seg.iter().map(|v| v.abs().ln()).collect();
        let rate = -fit_line(&x, &y, None).slope;
        if rate > 0.0 {
            s += c[n - 1] / rate;
        }
    }
    s
}

/// `D = ∫₀^∞ ⟨p(t) p(0)⟩ dt` from stationary trajectories.
pub fn green_kubo(trajs: &[Trajectory], opts: &GreenKuboOptions) -> Result<EstimateWithCI> {
    let dt = common_grid(trajs)?;
    let n = trajs[0].len();
    let max_lag = match opts.horizon {
        Some(h) => ((h / dt).round() as usize + 1).min(n),
        None => {
            // twenty decorrelation times, where the correlogram is pure noise
            let full = (n / 4).max(3);
            let c = replica_vacf(trajs, full);
            let all: Vec<usize> = (0..c.len()).collect();
            let c = mean_curve(&c, &all);
            match c.iter().position(|v| v.abs() < 0.05 * c[0]) {
                Some(k) => (20 * k.max(1) + 1).min(full),
                None => full,
            }
        }
    };
    if max_lag < 10 {
        return Err(GleError::Estimator("Green–Kubo horizon holds fewer than 10 lags".into()));
    }
    let curves = replica_vacf(trajs, max_lag);
    let mean = |idx: &[usize]| {
        let mut c = vec![0.0; max_lag];
        for &i in idx {
            for (a, v) in c.iter_mut().zip(&curves[i]) {
                *a += v / idx.len() as f64;
            }
        }
        c
    };
    let all: Vec<usize> = (0..curves.len()).collect();
    let c = mean(&all);
    let tail = &c[max_lag - (max_lag / 10).max(1)..];
    let tail_mean = tail.iter().sum::<f64>() / tail.len() as f64;
    if tail_mean.abs() > 0.1 * c[0] {
        return Err(GleError::Estimator(format!(
            "velocity autocorrelation has not decayed at the horizon ({:.3e} vs C(0) = {:.3e})",
            tail_mean, c[0]
        )));
    }
    let value = integrate(&c, dt);
    let boots = bootstrap_indices(curves.len(), opts.bootstrap.resamples, opts.bootstrap.seed, &|idx| {
        integrate(&mean(idx), dt)
    });
    let (lo, hi) = percentile_interval(&boots, 0.95);
    Ok(EstimateWithCI::new(value, lo, hi, "green_kubo", trajs.len()).with_window((0.0, (max_lag - 1) as f64 * dt)))
}

/// `β⁻¹ (M⁻¹)_{pp}` for the linear `(p, z)` drift of the free model.
pub fn green_kubo_analytic(model: &GleModel) -> Result<EstimateWithCI> {
    if !model.potential.is_zero() {
        return Err(GleError::Precondition("analytic Green–Kubo needs V ≡ 0".into()));
    }
    let m: DMatrix<f64> = model.drift_block();
    let inv = m
        .try_inverse()
        .ok_or_else(|| GleError::NonFinite("singular drift matrix".into()))?;
    let v = inv[(0, 0)] / model.beta;
    Ok(EstimateWithCI::new(v, v, v, "green_kubo_analytic", 0))
}

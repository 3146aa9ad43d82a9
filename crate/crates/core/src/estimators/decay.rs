use serde::Serialize;

use crate::error::{GleError, Result};
use crate::stats::{fit_line, t_critical};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecayFit {
    /// Positive for decay.
    pub rate: f64,
    pub lo: f64,
    pub hi: f64,
    /// Standard error of the rate.
    pub se: f64,
    pub r2: f64,
    pub amplitude: f64,
    pub n: usize,
}

/// Weighted regression of `log y` on `t`. Weights refer to the log-scale residuals.
pub fn fit_exponential_decay(t: &[f64], y: &[f64], weights: Option<&[f64]>) -> Result<DecayFit> {
    if t.len() != y.len() || weights.is_some_and(|w| w.len() != t.len()) {
        return Err(GleError::Dimension("series and weights must have equal length".into()));
    }
    if t.len() < 6 {
        return Err(GleError::Precondition(format!("need at least 6 points, got {}", t.len())));
    }
    if let Some(i) = y.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(GleError::Estimator(format!("non-positive value y[{i}] = {} in the fit window", y[i])));
    }
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let fit = fit_line(t, &ly, weights);
    let half = t_critical(fit.n as f64 - 2.0, 0.05) * fit.slope_se;
    Ok(DecayFit {
        rate: -fit.slope,
        lo: -fit.slope - half,
        hi: -fit.slope + half,
        se: fit.slope_se,
        r2: fit.r2,
        amplitude: fit.intercept.exp(),
        n: fit.n,
    })
}

//! Shared statistical containers and small numerical helpers.

use serde::{Deserialize, Serialize};

/// Point estimate with a confidence interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithCI {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
    pub method: String,
    pub n_samples: usize,
    pub window: Option<(f64, f64)>,
}

impl EstimateWithCI {
    /// Builds an estimate, widening the interval if needed so that `lo ≤ value ≤ hi`.
    pub fn new(value: f64, lo: f64, hi: f64, method: &str, n_samples: usize) -> Self {
        EstimateWithCI {
            value,
            lo: lo.min(value),
            hi: hi.max(value),
            method: method.to_string(),
            n_samples,
            window: None,
        }
    }

    pub fn with_window(mut self, w: (f64, f64)) -> Self {
        self.window = Some(w);
        self
    }

    /// Half-width of the interval, a stand-in for 2σ.
    pub fn half_width(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn relative_error(&self, truth: f64) -> f64 {
        (self.value - truth).abs() / truth.abs()
    }
}

/// Pairwise summation, independent of how the input was produced.
pub fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 32 {
        return x.iter().sum();
    }
    let mid = x.len() / 2;
    pairwise_sum(&x[..mid]) + pairwise_sum(&x[mid..])
}

pub fn mean(x: &[f64]) -> f64 {
    pairwise_sum(x) / x.len() as f64
}

pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    let d: Vec<f64> = x.iter().map(|v| (v - m) * (v - m)).collect();
    pairwise_sum(&d) / (x.len() as f64 - 1.0)
}

/// Empirical quantile by linear interpolation; `x` need not be sorted.
pub fn quantile(x: &[f64], q: f64) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
    let pos = q * (s.len() - 1) as f64;
    let i = pos.floor() as usize;
    let f = pos - i as f64;
    if i + 1 < s.len() {
        s[i] * (1.0 - f) + s[i + 1] * f
    } else {
        s[i]
    }
}

/// Weighted least squares fit `y ≈ a + b x`.
#[derive(Debug, Clone, Copy)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    pub slope_se: f64,
    pub r2: f64,
    pub n: usize,
}

pub fn fit_line(x: &[f64], y: &[f64], w: Option<&[f64]>) -> LineFit {
    let n = x.len();
    let ones = vec![1.0; n];
    let w = w.unwrap_or(&ones);
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for i in 0..n {
        let dx = x[i] - mx;
        let dy = y[i] - my;
        sxx += w[i] * dx * dx;
        sxy += w[i] * dx * dy;
        syy += w[i] * dy * dy;
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let mut sse = 0.0;
    for i in 0..n {
        let r = y[i] - intercept - slope * x[i];
        sse += w[i] * r * r;
    }
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    // weights treated as relative: residual variance estimated from the fit
    let dof = (n as f64 - 2.0).max(1.0);
    let slope_se = if sxx > 0.0 { (sse / dof / sxx).sqrt() } else { 0.0 };
    LineFit {
        intercept,
        slope,
        slope_se,
        r2,
        n,
    }
}

/// Two-sided Student-t critical value at level `1 − a`.
pub fn t_critical(dof: f64, a: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    StudentsT::new(0.0, 1.0, dof.max(1.0))
        .map(|t| t.inverse_cdf(1.0 - a / 2.0))
        .unwrap_or(1.96)
}

/// Replica bootstrap: `stat` receives resampled indices into `0..n`.
pub fn bootstrap_indices(n: usize, resamples: usize, seed: u64, stat: &(dyn Fn(&[usize]) -> f64 + Sync)) -> Vec<f64> {
    use rand::{Rng, SeedableRng};
    use rayon::prelude::*;
    (0..resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            stat(&idx)
        })
        .collect()
}

/// Central `level` percentile interval, ignoring non-finite resamples.
pub fn percentile_interval(values: &[f64], level: f64) -> (f64, f64) {
    let v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let a = 0.5 * (1.0 - level);
    (quantile(&v, a), quantile(&v, 1.0 - a))
}

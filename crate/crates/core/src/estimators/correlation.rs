use rustfft::{num_complex::Complex, FftPlanner};

/// Raw lagged sums `Σ_{i<n−k} x_i x_{i+k}` for `k < max_lag`, by zero-padded FFT.
pub fn lagged_products(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len();
    let len = (2 * n).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    buf.resize(len, Complex::new(0.0, 0.0));
    fwd.process(&mut buf);
    buf.iter_mut().for_each(|c| *c = Complex::new(c.norm_sqr(), 0.0));
    inv.process(&mut buf);
    buf.iter().take(max_lag.min(n)).map(|c| c.re / len as f64).collect()
}

/// Time-origin averaged autocorrelation `C(k) = ⟨x_i x_{i+k}⟩`.
pub fn autocorrelation(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len();
    lagged_products(x, max_lag)
        .into_iter()
        .enumerate()
        .map(|(k, s)| s / (n - k) as f64)
        .collect()
}

/// Time-origin averaged squared displacement `⟨(x_{i+k} − x_i)²⟩`.
pub fn mean_squared_displacement(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len();
    let s2 = lagged_products(x, max_lag);
    let sq: Vec<f64> = x.iter().map(|v| v * v).collect();
    let mut q = 2.0 * sq.iter().sum::<f64>();
    let mut out = Vec::with_capacity(s2.len());
    for (k, s) in s2.iter().enumerate() {
        if k > 0 {
            q -= sq[k - 1] + sq[n - k];
        }
        out.push(((q - 2.0 * s) / (n - k) as f64).max(0.0));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_direct_sums() {
        let x: Vec<f64> = (0..57).map(|i| ((i * 37 % 11) as f64).sin() + 0.1 * i as f64).collect();
        let ac = autocorrelation(&x, 20);
        let msd = mean_squared_displacement(&x, 20);
        for k in 0..20 {
            let n = x.len() - k;
            let a: f64 = (0..n).map(|i| x[i] * x[i + k]).sum::<f64>() / n as f64;
            let m: f64 = (0..n).map(|i| (x[i + k] - x[i]).powi(2)).sum::<f64>() / n as f64;
            assert!((a - ac[k]).abs() < 1e-10 * a.abs().max(1.0));
            assert!((m - msd[k]).abs() < 1e-9 * m.max(1.0));
        }
    }
}

//! Separable potentials `V(q) = Σᵢ v(qᵢ)` built from a one-dimensional profile `v`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{GleError, Result};

/// Periodic cubic spline through equispaced samples on `[0, 2π)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TabulatedRepr", into = "TabulatedRepr")]
pub struct Tabulated {
    values: Vec<f64>,
    // second derivatives at the knots
    curvature: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TabulatedRepr {
    values: Vec<f64>,
}

impl TryFrom<TabulatedRepr> for Tabulated {
    type Error = GleError;
    fn try_from(r: TabulatedRepr) -> Result<Self> {
        Tabulated::new(r.values)
    }
}

impl From<Tabulated> for TabulatedRepr {
    fn from(t: Tabulated) -> Self {
        TabulatedRepr { values: t.values }
    }
}

impl Tabulated {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if n < 4 {
            return Err(GleError::domain("potential.values", "need at least 4 samples"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(GleError::domain("potential.values", "non-finite sample"));
        }
        let h = TAU / n as f64;
        // cyclic tridiagonal system for the knot curvatures
        let mut a = DMatrix::<f64>::zeros(n, n);
        let mut rhs = DVector::<f64>::zeros(n);
        for i in 0..n {
            let im = (i + n - 1) % n;
            let ip = (i + 1) % n;
            a[(i, im)] += 1.0;
            a[(i, i)] += 4.0;
            a[(i, ip)] += 1.0;
            rhs[i] = 6.0 * (values[ip] - 2.0 * values[i] + values[im]) / (h * h);
        }
        let curvature = a
            .lu()
            .solve(&rhs)
            .ok_or_else(|| GleError::domain("potential.values", "spline system singular"))?;
        Ok(Tabulated {
            values,
            curvature: curvature.iter().copied().collect(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn derivative(&self, x: f64, order: u32) -> f64 {
        let n = self.values.len();
        let h = TAU / n as f64;
        let r = x.rem_euclid(TAU);
        let mut i = (r / h).floor() as usize;
        if i >= n {
            i = n - 1;
        }
        let j = (i + 1) % n;
        let t = r - i as f64 * h;
        let (y0, y1) = (self.values[i], self.values[j]);
        let (m0, m1) = (self.curvature[i], self.curvature[j]);
        let a = (h - t) / h;
        let b = t / h;
        match order {
            0 => {
                a * y0
                    + b * y1
                    + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0
            }
            1 => {
                (y1 - y0) / h - (3.0 * a * a - 1.0) * h / 6.0 * m0
                    + (3.0 * b * b - 1.0) * h / 6.0 * m1
            }
            2 => a * m0 + b * m1,
            3 => (m1 - m0) / h,
            _ => 0.0,
        }
    }
}

/// One-dimensional potential profile, summed over coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Potential {
    /// `v(x) = amplitude · cos x`; amplitude 0 gives the free particle.
    #[serde(rename_all = "snake_case")]
    Cosine { amplitude: f64 },
    /// `v(x) = ½ · stiffness · x²`.
    Quadratic { stiffness: f64 },
    /// `v(x) = Σₙ coefficients[n] · xⁿ`.
    Polynomial { coefficients: Vec<f64> },
    /// Periodic cubic spline through `values` sampled at `2πi/n`.
    Tabulated(Tabulated),
}

impl Potential {
    pub fn free() -> Self {
        Potential::Cosine { amplitude: 0.0 }
    }

    pub fn cosine(amplitude: f64) -> Self {
        Potential::Cosine { amplitude }
    }

    pub fn quadratic(stiffness: f64) -> Self {
        Potential::Quadratic { stiffness }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |p: &str| Err(GleError::domain(p, "must be finite"));
        match self {
            Potential::Cosine { amplitude } if !amplitude.is_finite() => bad("potential.amplitude"),
            Potential::Quadratic { stiffness } => {
                if !stiffness.is_finite() || *stiffness <= 0.0 {
                    Err(GleError::domain("potential.stiffness", "must be > 0"))
                } else {
                    Ok(())
                }
            }
            Potential::Polynomial { coefficients } => {
                if coefficients.is_empty() {
                    return Err(GleError::domain("potential.coefficients", "empty"));
                }
                match coefficients.iter().position(|c| !c.is_finite()) {
                    Some(i) => bad(&format!("potential.coefficients[{i}]")),
                    None => Ok(()),
                }
            }
            _ => Ok(()),
        }
    }

    /// `k`-th derivative of the profile.
    pub fn profile_derivative(&self, x: f64, k: u32) -> f64 {
        match self {
            Potential::Cosine { amplitude } => {
                if *amplitude == 0.0 {
                    return 0.0;
                }
                let r = x.rem_euclid(TAU);
                match k % 4 {
                    0 => amplitude * r.cos(),
                    1 => -amplitude * r.sin(),
                    2 => -amplitude * r.cos(),
                    _ => amplitude * r.sin(),
                }
            }
            Potential::Quadratic { stiffness } => match k {
                0 => 0.5 * stiffness * x * x,
                1 => stiffness * x,
                2 => *stiffness,
                _ => 0.0,
            },
            Potential::Polynomial { coefficients } => {
                let mut acc = 0.0;
                for (n, c) in coefficients.iter().enumerate().rev() {
                    let n = n as u32;
                    if n < k {
                        break;
                    }
                    // falling factorial n!/(n-k)!
                    let ff: f64 = ((n - k + 1)..=n).map(f64::from).product();
                    acc = acc * x + c * ff;
                }
                acc
            }
            Potential::Tabulated(t) => t.derivative(x, k),
        }
    }

    pub fn profile(&self, x: f64) -> f64 {
        self.profile_derivative(x, 0)
    }

    pub fn eval(&self, q: &[f64]) -> f64 {
        q.iter().map(|&x| self.profile(x)).sum()
    }

    pub fn grad(&self, q: &[f64], out: &mut [f64]) {
        for (o, &x) in out.iter_mut().zip(q) {
            *o = self.profile_derivative(x, 1);
        }
    }

    pub fn grad_vec(&self, q: &[f64]) -> Vec<f64> {
        q.iter().map(|&x| self.profile_derivative(x, 1)).collect()
    }

    /// Diagonal of the Hessian (the potential is separable).
    pub fn hessian_diag(&self, q: &[f64]) -> Vec<f64> {
        q.iter().map(|&x| self.profile_derivative(x, 2)).collect()
    }

    pub fn laplacian(&self, q: &[f64]) -> f64 {
        q.iter().map(|&x| self.profile_derivative(x, 2)).sum()
    }

    /// Frobenius norm of the Hessian.
    pub fn hessian_norm(&self, q: &[f64]) -> f64 {
        q.iter()
            .map(|&x| self.profile_derivative(x, 2).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_periodic(&self) -> bool {
        match self {
            Potential::Cosine { .. } | Potential::Tabulated(_) => true,
            Potential::Quadratic { .. } => false,
            Potential::Polynomial { coefficients } => coefficients.iter().skip(1).all(|&c| c == 0.0),
        }
    }

    /// Whether `v(−x) = v(x)`.
    pub fn is_even(&self) -> bool {
        match self {
            Potential::Cosine { .. } | Potential::Quadratic { .. } => true,
            Potential::Polynomial { coefficients } => coefficients
                .iter()
                .enumerate()
                .all(|(n, &c)| n % 2 == 0 || c == 0.0),
            Potential::Tabulated(t) => {
                let v = t.values();
                let n = v.len();
                (1..n).all(|i| (v[i] - v[n - i]).abs() <= 1e-12 * (1.0 + v[i].abs()))
            }
        }
    }

    /// Is the potential identically zero?
    pub fn is_zero(&self) -> bool {
        match self {
            Potential::Cosine { amplitude } => *amplitude == 0.0,
            Potential::Polynomial { coefficients } => coefficients.iter().all(|&c| c == 0.0),
            Potential::Tabulated(t) => t.values().iter().all(|&v| v == 0.0),
            Potential::Quadratic { .. } => false,
        }
    }

    /// Lower bound on the profile over one period (periodic kinds) or the real line.
    pub fn profile_min(&self) -> f64 {
        match self {
            Potential::Cosine { amplitude } => -amplitude.abs(),
            Potential::Quadratic { .. } => 0.0,
            _ => {
                let (lo, hi) = if self.is_periodic() { (0.0, TAU) } else { (-50.0, 50.0) };
                let n = 20_000;
                (0..=n)
                    .map(|i| self.profile(lo + (hi - lo) * i as f64 / n as f64))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }
}

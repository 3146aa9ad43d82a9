//! Model parameters, memory kernel and state.

mod admissibility;
mod fdt;
mod potential;

pub use admissibility::{confining_admissibility, default_radii, AdmissibilityReport, ConditionVerdict};
pub use fdt::{canonical_embedding, check_fdt, FdtReport};
pub use potential::{Potential, Tabulated};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::TAU;

use crate::error::{GleError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Torus,
    Confining,
}

/// Parameters of the extended system: `d` positions, `m` auxiliary modes per position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GleModel {
    pub d: usize,
    pub m: usize,
    pub lambda: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: f64,
    pub potential: Potential,
    pub domain_kind: DomainKind,
}

impl GleModel {
    pub fn new(
        d: usize,
        lambda: Vec<f64>,
        alpha: Vec<f64>,
        beta: f64,
        potential: Potential,
        domain_kind: DomainKind,
    ) -> Result<Self> {
        let model = GleModel {
            d,
            m: lambda.len(),
            lambda,
            alpha,
            beta,
            potential,
            domain_kind,
        };
        model.validate()?;
        Ok(model)
    }

    /// Torus model with unit-free defaults used throughout the tests.
    pub fn torus(lambda: Vec<f64>, alpha: Vec<f64>, beta: f64, potential: Potential) -> Result<Self> {
        Self::new(1, lambda, alpha, beta, potential, DomainKind::Torus)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 1 {
            return Err(GleError::domain("d", "must be ≥ 1"));
        }
        if self.m < 1 {
            return Err(GleError::domain("m", "must be ≥ 1"));
        }
        if self.lambda.len() != self.m {
            return Err(GleError::domain("lambda", format!("expected {} entries", self.m)));
        }
        if self.alpha.len() != self.m {
            return Err(GleError::domain("alpha", format!("expected {} entries", self.m)));
        }
        for (j, l) in self.lambda.iter().enumerate() {
            if !l.is_finite() {
                return Err(GleError::domain(format!("lambda[{j}]"), "must be finite"));
            }
        }
        for (j, a) in self.alpha.iter().enumerate() {
            if !(a.is_finite() && *a > 0.0) {
                return Err(GleError::domain(format!("alpha[{j}]"), "must be > 0"));
            }
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(GleError::domain("beta", "must be > 0"));
        }
        self.potential.validate()?;
        match self.domain_kind {
            DomainKind::Torus => {
                if !self.potential.is_periodic() {
                    return Err(GleError::domain(
                        "potential",
                        "torus domain requires a 2π-periodic potential",
                    ));
                }
            }
            DomainKind::Confining => {
                let report = confining_admissibility(&self.potential, self.d, &default_radii())?;
                if !report.all_passed() {
                    return Err(GleError::domain(
                        "potential",
                        format!("not admissible as confining: {}", report.summary()),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn friction(&self) -> f64 {
        kernel_mass(self)
    }

    /// Linear drift matrix `M` of one `(p, z₁..z_m)` block: `d/dt x = −M x + …`.
    pub fn drift_block(&self) -> DMatrix<f64> {
        let n = self.m + 1;
        let mut mat = DMatrix::zeros(n, n);
        for j in 0..self.m {
            mat[(0, j + 1)] = -self.lambda[j];
            mat[(j + 1, 0)] = self.lambda[j];
            mat[(j + 1, j + 1)] = self.alpha[j];
        }
        mat
    }

    /// Short stable hash of the canonical serialization.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_string(self).expect("model serializes");
        let digest = Sha256::digest(json.as_bytes());
        hex::encode(&digest[..8])
    }

    pub fn state_len(&self) -> usize {
        self.d * (2 + self.m)
    }
}

/// `γ(t) = Σⱼ λⱼ² e^{−αⱼ|t|}`.
pub fn kernel_eval(model: &GleModel, t: f64) -> f64 {
    model
        .lambda
        .iter()
        .zip(&model.alpha)
        .map(|(l, a)| l * l * (-a * t.abs()).exp())
        .sum()
}

/// `∫₀^∞ γ(t) dt = Σⱼ λⱼ²/αⱼ`, the friction of the white-noise limit.
pub fn kernel_mass(model: &GleModel) -> f64 {
    model
        .lambda
        .iter()
        .zip(&model.alpha)
        .map(|(l, a)| l * l / a)
        .sum()
}

/// Phase point. `z` is stored mode-major: `z[j*d + i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub z: Vec<f64>,
}

impl State {
    pub fn zeros(d: usize, m: usize) -> Self {
        State {
            q: vec![0.0; d],
            p: vec![0.0; d],
            z: vec![0.0; m * d],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(&self.p).chain(&self.z).all(|x| x.is_finite())
    }

    pub fn check(&self, model: &GleModel) -> Result<()> {
        if self.q.len() != model.d || self.p.len() != model.d || self.z.len() != model.m * model.d {
            return Err(GleError::Dimension(format!(
                "state has |q|={}, |p|={}, |z|={}; model has d={}, m={}",
                self.q.len(),
                self.p.len(),
                self.z.len(),
                model.d,
                model.m
            )));
        }
        if !self.is_finite() {
            return Err(GleError::NonFinite(format!("{self:?}")));
        }
        Ok(())
    }

    pub fn wrap(&mut self, domain: DomainKind) {
        if domain == DomainKind::Torus {
            for x in &mut self.q {
                *x = wrap_angle(*x);
            }
        }
    }
}

/// Map to `[0, 2π)`.
pub fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid can round up to TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> GleModel {
        GleModel::torus(vec![1.0], vec![1.0], 1.0, Potential::cosine(1.0)).unwrap()
    }

    #[test]
    fn kernel_values() {
        let m = unit();
        assert_eq!(kernel_eval(&m, 0.0), 1.0);
        let m2 = GleModel::torus(vec![1.0, 2.0], vec![1.0, 3.0], 1.0, Potential::free()).unwrap();
        assert_eq!(kernel_eval(&m2, 0.0), 5.0);
        let m3 = GleModel::torus(vec![1.0], vec![2.0], 1.0, Potential::free()).unwrap();
        assert!((kernel_eval(&m3, 0.5) - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(kernel_eval(&m3, -0.5), kernel_eval(&m3, 0.5));
    }

    #[test]
    fn kernel_mass_values() {
        assert_eq!(kernel_mass(&unit()), 1.0);
        let m = GleModel::torus(vec![1.0, 2.0], vec![2.0, 4.0], 1.0, Potential::free()).unwrap();
        assert_eq!(kernel_mass(&m), 1.5);
    }

    #[test]
    fn validation_names_offending_entry() {
        let err = GleModel::torus(vec![1.0], vec![-1.0], 1.0, Potential::free()).unwrap_err();
        assert!(matches!(err, GleError::Domain { ref path, .. } if path == "alpha[0]"));
        let err = GleModel::torus(vec![1.0], vec![1.0], 0.0, Potential::free()).unwrap_err();
        assert!(matches!(err, GleError::Domain { ref path, .. } if path == "beta"));
        assert!(GleModel::torus(vec![1.0], vec![1.0], 1.0, Potential::quadratic(1.0)).is_err());
        assert!(GleModel::torus(vec![], vec![], 1.0, Potential::free()).is_err());
    }

    #[test]
    fn confining_models() {
        let q = GleModel::new(2, vec![1.0], vec![1.0], 1.0, Potential::quadratic(1.0), DomainKind::Confining);
        assert!(q.is_ok());
        let c = GleModel::new(1, vec![1.0], vec![1.0], 1.0, Potential::cosine(1.0), DomainKind::Confining);
        assert!(c.is_err());
    }

    #[test]
    fn drift_block_layout() {
        let m = GleModel::torus(vec![1.0, 2.0], vec![3.0, 4.0], 1.0, Potential::free()).unwrap();
        let b = m.drift_block();
        assert_eq!(b[(0, 1)], -1.0);
        assert_eq!(b[(0, 2)], -2.0);
        assert_eq!(b[(2, 0)], 2.0);
        assert_eq!(b[(2, 2)], 4.0);
        assert_eq!(b[(0, 0)], 0.0);
    }

    #[test]
    fn fingerprint_tracks_parameters() {
        let a = unit();
        let mut b = unit();
        assert_eq!(a.fingerprint(), b.fingerprint());
        b.beta = 2.0;
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint().len(), 16);
    }

    #[test]
    fn wrap_stays_in_range() {
        for x in [-1e-18, -TAU, TAU, 3.0 * TAU + 0.1, -0.5] {
            let w = wrap_angle(x);
            assert!((0.0..TAU).contains(&w), "{x} -> {w}");
        }
    }
}

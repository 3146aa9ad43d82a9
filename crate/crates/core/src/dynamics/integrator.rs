use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{GleError, Result};
use crate::linalg::{psd_sqrt, van_loan};
use crate::model::{GleModel, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    EulerMaruyama,
    OuSplitting,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorScheme {
    pub kind: SchemeKind,
    pub dt: f64,
}

impl IntegratorScheme {
    pub fn euler_maruyama(dt: f64) -> Self {
        IntegratorScheme {
            kind: SchemeKind::EulerMaruyama,
            dt,
        }
    }

    pub fn ou_splitting(dt: f64) -> Self {
        IntegratorScheme {
            kind: SchemeKind::OuSplitting,
            dt,
        }
    }
}

/// Exact Gaussian transition of one `(p, z₁..z_m)` block over `dt` with frozen force.
#[derive(Debug, Clone)]
pub struct OuBlock {
    /// `e^{−M dt}`
    pub mean_map: DMatrix<f64>,
    /// `∫₀^dt e^{−M s} e_p ds`, the response to a unit force on `p`
    pub force_response: DVector<f64>,
    /// `Σ_dt`
    pub covariance: DMatrix<f64>,
    /// `S` with `S Sᵀ = Σ_dt`
    pub factor: DMatrix<f64>,
}

impl OuBlock {
    pub fn new(drift: &DMatrix<f64>, diffusion: &DMatrix<f64>, dt: f64) -> Self {
        let (mean_map, covariance, integral) = van_loan(&(-drift), diffusion, dt);
        let factor = psd_sqrt(&covariance);
        OuBlock {
            force_response: integral.column(0).into_owned(),
            mean_map,
            covariance,
            factor,
        }
    }

    pub fn for_model(model: &GleModel, dt: f64) -> Self {
        let n = model.m + 1;
        let mut q = DMatrix::zeros(n, n);
        for j in 0..model.m {
            q[(j + 1, j + 1)] = 2.0 * model.alpha[j] / model.beta;
        }
        Self::new(&model.drift_block(), &q, dt)
    }
}

/// Stepper for the extended system with scheme-specific caches built once.
#[derive(Debug, Clone)]
pub struct Integrator {
    model: GleModel,
    scheme: IntegratorScheme,
    block: Option<OuBlock>,
    noise_scale: Vec<f64>,
}

impl Integrator {
    pub fn new(model: &GleModel, scheme: IntegratorScheme) -> Result<Self> {
        if !(scheme.dt > 0.0 && scheme.dt.is_finite()) {
            return Err(GleError::domain("dt", "must be > 0"));
        }
        if scheme.kind == SchemeKind::EulerMaruyama {
            let amax = model.alpha.iter().copied().fold(0.0, f64::max);
            if scheme.dt * amax > 0.1 * (1.0 + 1e-12) {
                return Err(GleError::domain(
                    "dt",
                    format!(
                        "euler_maruyama needs dt ≤ 0.1/max α = {:.3e}; use ou_splitting for stiff models",
                        0.1 / amax
                    ),
                ));
            }
        }
        let block = match scheme.kind {
            SchemeKind::OuSplitting => Some(OuBlock::for_model(model, scheme.dt)),
            SchemeKind::EulerMaruyama => None,
        };
        Ok(Integrator {
            model: model.clone(),
            scheme,
            block,
            noise_scale: model.alpha.iter().map(|a| (2.0 * a / model.beta).sqrt()).collect(),
        })
    }

    pub fn model(&self) -> &GleModel {
        &self.model
    }

    pub fn scheme(&self) -> IntegratorScheme {
        self.scheme
    }

    pub fn block(&self) -> Option<&OuBlock> {
        self.block.as_ref()
    }

    /// Standard normals consumed per step.
    pub fn noise_width(&self) -> usize {
        let (d, m) = (self.model.d, self.model.m);
        match self.scheme.kind {
            SchemeKind::EulerMaruyama => m * d,
            SchemeKind::OuSplitting => (m + 1) * d,
        }
    }

    /// Advances unwrapped coordinates in place; `normals` are standard normals.
    pub fn advance(&self, q: &mut [f64], p: &mut [f64], z: &mut [f64], normals: &[f64]) {
        let (d, m) = (self.model.d, self.model.m);
        let dt = self.scheme.dt;
        let lam = &self.model.lambda;
        let alpha = &self.model.alpha;
        match self.scheme.kind {
            SchemeKind::EulerMaruyama => {
                let h = dt.sqrt();
                for i in 0..d {
                    let force = -self.model.potential.profile_derivative(q[i], 1);
                    let p0 = p[i];
                    let mut coupling = 0.0;
                    for j in 0..m {
                        coupling += lam[j] * z[j * d + i];
                    }
                    q[i] += p0 * dt;
                    p[i] += (force + coupling) * dt;
                    for j in 0..m {
                        let zij = &mut z[j * d + i];
                        *zij += (-lam[j] * p0 - alpha[j] * *zij) * dt + self.noise_scale[j] * h * normals[j * d + i];
                    }
                }
            }
            SchemeKind::OuSplitting => {
                let b = self.block.as_ref().expect("splitting cache");
                let n = m + 1;
                let mut x = [0.0f64; 16];
                let mut y = [0.0f64; 16];
                assert!(n <= 16, "at most 15 auxiliary modes in the splitting scheme");
                for i in 0..d {
                    q[i] += 0.5 * dt * p[i];
                    let force = -self.model.potential.profile_derivative(q[i], 1);
                    x[0] = p[i];
                    for j in 0..m {
                        x[j + 1] = z[j * d + i];
                    }
                    for r in 0..n {
                        let mut acc = b.force_response[r] * force;
                        for c in 0..n {
                            acc += b.mean_map[(r, c)] * x[c] + b.factor[(r, c)] * normals[i * n + c];
                        }
                        y[r] = acc;
                    }
                    p[i] = y[0];
                    for j in 0..m {
                        z[j * d + i] = y[j + 1];
                    }
                    q[i] += 0.5 * dt * p[i];
                }
            }
        }
    }

    /// One step on a [`State`], wrapping `q` on the torus.
    pub fn step(&self, state: &State, normals: &[f64]) -> Result<State> {
        state.check(&self.model)?;
        if normals.len() != self.noise_width() {
            return Err(GleError::Dimension(format!(
                "expected {} noise values, got {}",
                self.noise_width(),
                normals.len()
            )));
        }
        let mut s = state.clone();
        self.advance(&mut s.q, &mut s.p, &mut s.z, normals);
        s.wrap(self.model.domain_kind);
        if !s.is_finite() {
            return Err(GleError::NonFinite("state after step".into()));
        }
        Ok(s)
    }
}

/// Euler–Maruyama step with Brownian increments `ΔW` (length `m·d`, mode-major).
pub fn step_em(model: &GleModel, state: &State, dt: f64, increments: &[f64]) -> Result<State> {
    let integ = Integrator {
        model: model.clone(),
        scheme: IntegratorScheme::euler_maruyama(dt),
        block: None,
        noise_scale: model.alpha.iter().map(|a| (2.0 * a / model.beta).sqrt()).collect(),
    };
    if !(dt > 0.0) {
        return Err(GleError::domain("dt", "must be > 0"));
    }
    let h = dt.sqrt();
    let normals: Vec<f64> = increments.iter().map(|w| w / h).collect();
    integ.step(state, &normals)
}

/// Strang splitting step; `normals` are `(m+1)·d` standard normals, coordinate-major.
pub fn step_splitting(model: &GleModel, state: &State, dt: f64, normals: &[f64]) -> Result<State> {
    Integrator::new(model, IntegratorScheme::ou_splitting(dt))?.step(state, normals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Potential;

    fn free(lambda: f64, alpha: f64) -> GleModel {
        GleModel::torus(vec![lambda], vec![alpha], 1.0, Potential::free()).unwrap()
    }

    #[test]
    fn em_deterministic_step() {
        let m = free(1.0, 1.0);
        let s = State {
            q: vec![0.0],
            p: vec![1.0],
            z: vec![0.0],
        };
        let out = step_em(&m, &s, 0.1, &[0.0]).unwrap();
        assert!((out.q[0] - 0.1).abs() < 1e-15);
        assert_eq!(out.p[0], 1.0);
        assert!((out.z[0] + 0.1).abs() < 1e-15);
    }

    #[test]
    fn em_decoupled_drift() {
        let m = free(0.0, 1.0);
        let s = State {
            q: vec![1.0],
            p: vec![0.5],
            z: vec![2.0],
        };
        let out = step_em(&m, &s, 0.05, &[0.0]).unwrap();
        assert!((out.z[0] - 2.0 * (1.0 - 0.05)).abs() < 1e-15);
        assert_eq!(out.p[0], 0.5);
    }

    #[test]
    fn splitting_ou_mean() {
        let m = free(0.0, 2.0);
        let s = State {
            q: vec![1.0],
            p: vec![0.5],
            z: vec![2.0],
        };
        let out = step_splitting(&m, &s, 0.3, &[0.0, 0.0]).unwrap();
        assert_eq!(out.p[0], 0.5);
        assert!((out.z[0] - 2.0 * (-0.6f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn non_finite_rejected() {
        let m = free(1.0, 1.0);
        let s = State {
            q: vec![f64::NAN],
            p: vec![0.0],
            z: vec![0.0],
        };
        assert!(matches!(step_em(&m, &s, 0.01, &[0.0]), Err(GleError::NonFinite(_))));
    }

    #[test]
    fn stiffness_guard() {
        let m = free(1.0, 100.0);
        assert!(Integrator::new(&m, IntegratorScheme::euler_maruyama(0.01)).is_err());
        assert!(Integrator::new(&m, IntegratorScheme::euler_maruyama(0.001)).is_ok());
        assert!(Integrator::new(&m, IntegratorScheme::ou_splitting(0.5)).is_ok());
    }
}

use serde::Serialize;

use super::Potential;
use crate::error::{GleError, Result};

#[derive(Debug, Clone, Serialize)]
pub struct ConditionVerdict {
    pub passed: bool,
    pub value: f64,
    pub detail: String,
}

/// Numerical check of the three growth conditions on a confining potential.
#[derive(Debug, Clone, Serialize)]
pub struct AdmissibilityReport {
    /// `min ⟨∇V,q⟩ − σV − b‖q‖²` at the best `(σ, b)`.
    pub growth: ConditionVerdict,
    pub sigma: f64,
    pub b: f64,
    /// `max ‖∇²V‖_F` over the grid.
    pub hessian: ConditionVerdict,
    /// Growth of `|∇V|²/2 − ΔV` along the radii.
    pub poincare: ConditionVerdict,
}

impl AdmissibilityReport {
    pub fn all_passed(&self) -> bool {
        self.growth.passed && self.hessian.passed && self.poincare.passed
    }

    pub fn summary(&self) -> String {
        let flag = |c: &ConditionVerdict| if c.passed { "ok" } else { "FAILS" };
        format!(
            "growth {} ({}), hessian bound {} ({}), poincare growth {} ({})",
            flag(&self.growth),
            self.growth.detail,
            flag(&self.hessian),
            self.hessian.detail,
            flag(&self.poincare),
            self.poincare.detail
        )
    }
}

pub fn default_radii() -> Vec<f64> {
    (0..=200).map(|i| 0.25 * i as f64).collect()
}

fn directions(d: usize) -> Vec<Vec<f64>> {
    let mut dirs = Vec::new();
    for sign in [1.0, -1.0] {
        let mut e = vec![0.0; d];
        e[0] = sign;
        dirs.push(e);
        if d > 1 {
            dirs.push(vec![sign / (d as f64).sqrt(); d]);
        }
    }
    dirs
}

/// Evaluates the confinement conditions on rays `r·u` for the given increasing radii.
pub fn confining_admissibility(potential: &Potential, d: usize, radii: &[f64]) -> Result<AdmissibilityReport> {
    if potential.is_periodic() {
        return Err(GleError::Precondition(
            "admissibility is only meaningful for confining potentials; periodic potential is not confining".into(),
        ));
    }
    if radii.len() < 4 || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(GleError::Precondition("radii must be strictly increasing, at least 4".into()));
    }
    let dirs = directions(d.max(1));
    let points: Vec<Vec<f64>> = radii
        .iter()
        .flat_map(|&r| dirs.iter().map(move |u| u.iter().map(|x| r * x).collect()))
        .collect();

    // (σ, b) by grid search maximizing the worst-case slack
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for si in 1..=40 {
        let sigma = 0.05 * si as f64;
        for bi in 1..=40 {
            let b = 0.025 * bi as f64;
            let worst = points
                .iter()
                .map(|q| {
                    let g = potential.grad_vec(q);
                    let gq: f64 = g.iter().zip(q).map(|(a, b)| a * b).sum();
                    let q2: f64 = q.iter().map(|x| x * x).sum();
                    gq - sigma * potential.eval(q) - b * q2
                })
                .fold(f64::INFINITY, f64::min);
            if worst > best.0 {
                best = (worst, sigma, b);
            }
        }
    }
    let growth = ConditionVerdict {
        passed: best.0 >= -1e-9,
        value: best.0,
        detail: format!("sigma={}, b={}", best.1, best.2),
    };

    let per_radius = |f: &dyn Fn(&[f64]) -> f64| -> Vec<f64> {
        radii
            .iter()
            .map(|&r| {
                dirs.iter()
                    .map(|u| {
                        let q: Vec<f64> = u.iter().map(|x| r * x).collect();
                        f(&q)
                    })
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect()
    };

    let hess = per_radius(&|q| potential.hessian_norm(q));
    let half = hess.len() / 2;
    let inner = hess[..half].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let outer = hess[half..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let max_hess = inner.max(outer);
    let hessian = ConditionVerdict {
        passed: outer <= inner * (1.0 + 1e-9) + 1e-12,
        value: max_hess,
        detail: format!("inner max {inner:.6e}, outer max {outer:.6e}"),
    };

    let w = per_radius(&|q| {
        let g2: f64 = potential.grad_vec(q).iter().map(|x| x * x).sum();
        0.5 * g2 - potential.laplacian(q)
    });
    let outer_monotone = w[half..].windows(2).all(|p| p[1] >= p[0] - 1e-12 * p[0].abs().max(1.0));
    let grows = w[w.len() - 1] > w[half] && w[w.len() - 1] > w[0];
    let poincare = ConditionVerdict {
        passed: outer_monotone && grows,
        value: w[w.len() - 1],
        detail: format!("W(r_min)={:.6e}, W(r_max)={:.6e}", w[0], w[w.len() - 1]),
    };

    Ok(AdmissibilityReport {
        growth,
        sigma: best.1,
        b: best.2,
        hessian,
        poincare,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_passes_everything() {
        let r = confining_admissibility(&Potential::quadratic(1.0), 1, &default_radii()).unwrap();
        assert!(r.all_passed(), "{}", r.summary());
        assert_eq!(r.hessian.value, 1.0);
    }

    #[test]
    fn cosine_is_rejected() {
        assert!(confining_admissibility(&Potential::cosine(1.0), 1, &default_radii()).is_err());
    }

    #[test]
    fn quartic_hessian_unbounded() {
        let v = Potential::Polynomial {
            coefficients: vec![0.0, 0.0, 0.0, 0.0, 0.25],
        };
        let r = confining_admissibility(&v, 1, &default_radii()).unwrap();
        assert!(!r.hessian.passed);
        // 3 r² at the largest radius
        assert!((r.hessian.value - 3.0 * 50.0f64.powi(2)).abs() < 1e-9);
        assert!(r.poincare.passed);
    }
}

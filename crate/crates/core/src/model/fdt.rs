use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{GleError, Result};

#[derive(Debug, Clone, Serialize)]
pub struct FdtReport {
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Checks `C Cᵀ = β⁻¹ (A + Aᵀ)` in Frobenius norm.
pub fn check_fdt(drift: &DMatrix<f64>, noise: &DMatrix<f64>, beta: f64) -> Result<FdtReport> {
    if !drift.is_square() || !noise.is_square() || drift.nrows() != noise.nrows() {
        return Err(GleError::Dimension(format!(
            "drift is {}x{}, noise is {}x{}",
            drift.nrows(),
            drift.ncols(),
            noise.nrows(),
            noise.ncols()
        )));
    }
    if !(beta > 0.0) {
        return Err(GleError::domain("beta", "must be > 0"));
    }
    let lhs = noise * noise.transpose();
    let rhs = (drift + drift.transpose()) / beta;
    let residual = (lhs - rhs).norm();
    let tolerance = 1e-12 * drift.norm().max(1.0);
    Ok(FdtReport {
        residual,
        tolerance,
        passed: residual <= tolerance,
    })
}

/// Diagonal embedding `A = diag(α)`, `C = diag(√(2αⱼ/β))`.
pub fn canonical_embedding(alpha: &[f64], beta: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let a = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(alpha));
    let c = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        alpha.len(),
        alpha.iter().map(|a| (2.0 * a / beta).sqrt()),
    ));
    (a, c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_passes() {
        let (a, c) = canonical_embedding(&[1.0, 2.0], 1.0);
        let r = check_fdt(&a, &c, 1.0).unwrap();
        assert!(r.passed);
        assert!(r.residual < 1e-15);
    }

    #[test]
    fn unit_noise_fails() {
        let one = DMatrix::from_element(1, 1, 1.0);
        assert!(!check_fdt(&one, &one, 1.0).unwrap().passed);
    }

    #[test]
    fn zero_passes() {
        let z = DMatrix::zeros(2, 2);
        let r = check_fdt(&z, &z, 1.0).unwrap();
        assert!(r.passed && r.residual == 0.0);
    }

    #[test]
    fn mismatch_is_error() {
        assert!(check_fdt(&DMatrix::zeros(2, 2), &DMatrix::zeros(3, 3), 1.0).is_err());
    }
}

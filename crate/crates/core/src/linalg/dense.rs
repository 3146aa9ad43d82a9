use nalgebra::DMatrix;

/// Symmetric square root factor `S` with `S Sᵀ = A`, clamping tiny negative eigenvalues.
pub fn psd_sqrt(a: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (a + a.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let d = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose()
}

/// Van Loan block exponential: for `dx = F x dt + G dW` with `Q = G Gᵀ`,
/// returns `(e^{F h}, ∫₀ʰ e^{F s} Q e^{Fᵀ s} ds, ∫₀ʰ e^{F s} ds)`.
///
/// The block exponential contains `e^{−Fᵀh}`, which overflows for long steps, so it is
/// evaluated at `h / 2ᵏ` with `‖F‖ h / 2ᵏ ≤ 1` and the three terms are then doubled `k` times.
pub fn van_loan(f: &DMatrix<f64>, q: &DMatrix<f64>, h: f64) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let norm = f.column_iter().map(|c| c.lp_norm(1)).fold(0.0, f64::max);
    let halvings = (norm * h).log2().ceil().max(0.0) as i32;
    let (mut phi, mut cov, mut integral) = van_loan_short(f, q, h / 2f64.powi(halvings));
    for _ in 0..halvings {
        cov = &phi * &cov * phi.transpose() + &cov;
        integral = &integral + &phi * &integral;
        phi = &phi * &phi;
    }
    (phi, (&cov + cov.transpose()) * 0.5, integral)
}

fn van_loan_short(f: &DMatrix<f64>, q: &DMatrix<f64>, h: f64) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let n = f.nrows();
    let mut big = DMatrix::zeros(2 * n, 2 * n);
    big.view_mut((0, 0), (n, n)).copy_from(&(-f));
    big.view_mut((0, n), (n, n)).copy_from(q);
    big.view_mut((n, n), (n, n)).copy_from(&f.transpose());
    let e = (big * h).exp();
    let f22 = e.view((n, n), (n, n)).into_owned();
    let g12 = e.view((0, n), (n, n)).into_owned();
    let phi = f22.transpose();
    let cov = &phi * g12;
    let cov = (&cov + cov.transpose()) * 0.5;

    let mut aug = DMatrix::zeros(2 * n, 2 * n);
    aug.view_mut((0, 0), (n, n)).copy_from(f);
    aug.view_mut((0, n), (n, n)).copy_from(&DMatrix::identity(n, n));
    let ea = (aug * h).exp();
    let integral = ea.view((0, n), (n, n)).into_owned();
    (phi, cov, integral)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_ou() {
        let f = DMatrix::from_element(1, 1, -2.0);
        let q = DMatrix::from_element(1, 1, 4.0);
        let (phi, cov, int) = van_loan(&f, &q, 0.3);
        assert!((phi[(0, 0)] - (-0.6f64).exp()).abs() < 1e-14);
        // 4 (1 − e^{−4h}) / 4
        assert!((cov[(0, 0)] - (1.0 - (-1.2f64).exp())).abs() < 1e-14);
        assert!((int[(0, 0)] - (1.0 - (-0.6f64).exp()) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn long_steps_stay_finite() {
        let f = DMatrix::from_element(1, 1, -2.0);
        let q = DMatrix::from_element(1, 1, 4.0);
        let (phi, cov, int) = van_loan(&f, &q, 500.0);
        assert_eq!(phi[(0, 0)], 0.0);
        assert!((cov[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((int[(0, 0)] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sqrt_reconstructs() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let s = psd_sqrt(&a);
        assert!((&s * s.transpose() - a).norm() < 1e-13);
    }
}

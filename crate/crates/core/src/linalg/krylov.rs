use nalgebra::DMatrix;

use super::sparse::{axpy, dot, norm2, LinearOperator};
use crate::error::{GleError, Result};

#[derive(Debug, Clone, Copy)]
pub struct KrylovOptions {
    /// Relative accuracy target for the whole interval.
    pub tol: f64,
    pub max_dim: usize,
    pub max_substeps: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        KrylovOptions {
            tol: 1e-9,
            max_dim: 40,
            max_substeps: 100_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KrylovOutcome {
    pub result: Vec<f64>,
    pub substeps: usize,
    pub matvecs: usize,
}

/// Computes `e^{−t A} v` by restarted Arnoldi with a posteriori step control.
pub fn expm_neg_apply(a: &dyn LinearOperator, v: &[f64], t: f64, opts: KrylovOptions) -> Result<KrylovOutcome> {
    let n = a.nrows();
    if v.len() != n || a.ncols() != n {
        return Err(GleError::Dimension(format!("operator {}x{}, vector {}", a.nrows(), a.ncols(), v.len())));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(GleError::Precondition(format!("time must be finite and ≥ 0, got {t}")));
    }
    let mut w = v.to_vec();
    if t == 0.0 {
        return Ok(KrylovOutcome {
            result: w,
            substeps: 0,
            matvecs: 0,
        });
    }
    let scale0 = norm2(v);
    let mut t_done = 0.0;
    let mut substeps = 0;
    let mut matvecs = 0;
    let mut u = vec![0.0; n];

    while t_done < t {
        if substeps >= opts.max_substeps {
            return Err(GleError::NoConvergence {
                solver: "krylov-expm".into(),
                iterations: substeps,
                residual: t - t_done,
            });
        }
        let beta = norm2(&w);
        if beta <= f64::MIN_POSITIVE {
            break;
        }
        let remaining = t - t_done;
        let mdim = opts.max_dim.min(n);
        let mut basis: Vec<Vec<f64>> = vec![w.iter().map(|x| x / beta).collect()];
        let mut h = DMatrix::<f64>::zeros(mdim + 1, mdim);
        let mut chosen: Option<(f64, DMatrix<f64>, usize)> = None;
        let budget = |tau: f64| opts.tol * scale0.max(beta) * (tau / t).max(1e-3);

        for j in 0..mdim {
            a.apply(&basis[j], &mut u);
            matvecs += 1;
            u.iter_mut().for_each(|x| *x = -*x);
            // modified Gram-Schmidt, twice
            for _ in 0..2 {
                for (i, b) in basis.iter().enumerate() {
                    let c = dot(b, &u);
                    h[(i, j)] += c;
                    axpy(-c, b, &mut u);
                }
            }
            let hn = norm2(&u);
            h[(j + 1, j)] = hn;
            let k = j + 1;
            let hk = h.view((0, 0), (k, k)).into_owned();
            let breakdown = hn <= 1e-13 * h.view((0, 0), (k, k)).norm().max(1.0);
            let is_last = k == mdim || breakdown;
            if k % 4 == 0 || is_last {
                let e = (&hk * remaining).exp();
                let err = beta * hn * e[(k - 1, 0)].abs();
                if breakdown || err <= budget(remaining) {
                    chosen = Some((remaining, e, k));
                    break;
                }
                if is_last {
                    let mut tau = remaining;
                    loop {
                        tau *= 0.5;
                        let e = (&hk * tau).exp();
                        let err = beta * hn * e[(k - 1, 0)].abs();
                        if err <= budget(tau) {
                            chosen = Some((tau, e, k));
                            break;
                        }
                        if tau < 1e-14 * t {
                            return Err(GleError::NoConvergence {
                                solver: "krylov-expm".into(),
                                iterations: substeps,
                                residual: err,
                            });
                        }
                    }
                    break;
                }
            }
            if breakdown {
                break;
            }
            basis.push(u.iter().map(|x| x / hn).collect());
        }

        let (tau, e, k) = chosen.expect("step chosen");
        let mut next = vec![0.0; n];
        for (i, b) in basis.iter().take(k).enumerate() {
            axpy(beta * e[(i, 0)], b, &mut next);
        }
        w = next;
        t_done += tau;
        if remaining - tau <= 1e-15 * t {
            t_done = t;
        }
        substeps += 1;
    }
    if w.iter().any(|x| !x.is_finite()) {
        return Err(GleError::NonFinite("krylov exponential produced non-finite values".into()));
    }
    Ok(KrylovOutcome {
        result: w,
        substeps,
        matvecs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CsrMatrix;

    #[test]
    fn matches_dense_exponential() {
        let n = 60;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 1.0 + i as f64 * 0.3));
            if i + 1 < n {
                t.push((i, i + 1, 0.7));
                t.push((i + 1, i, -0.9));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &t);
        let v: Vec<f64> = (0..n).map(|i| ((i * 7) % 5) as f64 - 2.0).collect();
        for time in [0.1, 1.0, 3.0] {
            let k = expm_neg_apply(&a, &v, time, KrylovOptions::default()).unwrap().result;
            let dense = (a.to_dense() * -time).exp() * nalgebra::DVector::from_column_slice(&v);
            let err: f64 = k.iter().zip(dense.iter()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            assert!(err < 1e-9 * norm2(&v), "t={time}: err {err}");
        }
    }

    #[test]
    fn zero_time_is_identity() {
        let a = CsrMatrix::identity(3);
        let v = vec![1.0, 2.0, 3.0];
        assert_eq!(expm_neg_apply(&a, &v, 0.0, KrylovOptions::default()).unwrap().result, v);
    }
}

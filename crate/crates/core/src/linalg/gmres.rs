use super::sparse::{axpy, dot, norm2, LinearOperator};
use crate::error::{GleError, Result};

#[derive(Debug, Clone, Copy)]
pub struct GmresOptions {
    pub rtol: f64,
    pub restart: usize,
    pub max_iter: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        GmresOptions {
            rtol: 1e-10,
            restart: 120,
            max_iter: 20_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GmresOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Restarted GMRES with right preconditioner `x = M⁻¹ y`; `precond` applies `M⁻¹` in place.
pub fn gmres(
    a: &dyn LinearOperator,
    b: &[f64],
    precond: &dyn Fn(&mut [f64]),
    opts: GmresOptions,
) -> Result<GmresOutcome> {
    let n = a.nrows();
    let bnorm = norm2(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(GmresOutcome {
            x,
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let m = opts.restart.min(n).max(1);
    let mut iterations = 0;
    let mut r = b.to_vec();
    let mut tmp = vec![0.0; n];
    loop {
        // true residual at each restart
        a.apply(&x, &mut tmp);
        for i in 0..n {
            r[i] = b[i] - tmp[i];
        }
        let beta = norm2(&r);
        let rel = beta / bnorm;
        if rel <= opts.rtol {
            return Ok(GmresOutcome {
                x,
                iterations,
                relative_residual: rel,
            });
        }
        if iterations >= opts.max_iter {
            return Err(GleError::NoConvergence {
                solver: "gmres".into(),
                iterations,
                residual: rel,
            });
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|x| x / beta).collect()];
        let mut h = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for j in 0..m {
            let mut z = v[j].clone();
            precond(&mut z);
            let mut w = vec![0.0; n];
            a.apply(&z, &mut w);
            iterations += 1;
            for _ in 0..2 {
                for i in 0..=j {
                    let c = dot(&v[i], &w);
                    h[i][j] += c;
                    axpy(-c, &v[i], &mut w);
                }
            }
            let hn = norm2(&w);
            h[j + 1][j] = hn;
            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let den = (h[j][j].powi(2) + h[j + 1][j].powi(2)).sqrt();
            if den == 0.0 {
                k_used = j;
                break;
            }
            cs[j] = h[j][j] / den;
            sn[j] = h[j + 1][j] / den;
            h[j][j] = den;
            h[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            k_used = j + 1;
            if g[j + 1].abs() / bnorm <= opts.rtol * 0.5 || hn <= 1e-300 || iterations >= opts.max_iter {
                break;
            }
            v.push(w.iter().map(|x| x / hn).collect());
        }
        // back substitution
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for l in (i + 1)..k_used {
                s -= h[i][l] * y[l];
            }
            y[i] = s / h[i][i];
        }
        let mut update = vec![0.0; n];
        for (i, yi) in y.iter().enumerate() {
            axpy(*yi, &v[i], &mut update);
        }
        precond(&mut update);
        axpy(1.0, &update, &mut x);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CsrMatrix;

    #[test]
    fn solves_nonsymmetric_system() {
        let n = 50;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0 + i as f64));
            if i + 1 < n {
                t.push((i, i + 1, 1.0));
                t.push((i + 1, i, -1.5));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &t);
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let d = a.diag();
        let out = gmres(&a, &b, &|v: &mut [f64]| v.iter_mut().zip(&d).for_each(|(x, di)| *x /= di), GmresOptions::default())
            .unwrap();
        let r: Vec<f64> = a.apply_vec(&out.x).iter().zip(&b).map(|(x, y)| x - y).collect();
        assert!(norm2(&r) < 1e-9 * norm2(&b));
    }
}

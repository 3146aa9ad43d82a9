//! Spectral gap of `L` on mean-zero functions from Arnoldi on `e^{−τL}`.
//!
//! The dominant part of the spectrum of `e^{−τL}` corresponds to the eigenvalues
//! of `L` closest to the imaginary axis, so no shifted solves are needed.

use nalgebra::{Complex, DMatrix, DVector};
use serde::Serialize;

use super::assemble::OperatorMatrix;
use super::basis::SpectralBasis;
use super::semigroup::{random_smooth_state, semigroup_apply};
use crate::error::{GleError, Result};
use crate::linalg::{axpy, dot, norm2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Even,
    Odd,
}

#[derive(Debug, Clone, Copy)]
pub struct GapOptions {
    pub tau: f64,
    pub krylov_dim: usize,
    /// Ritz pairs are kept when `‖Tx − θx‖ ≤ residual_tol·|θ|`.
    pub residual_tol: f64,
    /// Ritz vectors with more tail mass than this are discretization artefacts.
    pub tail_threshold: f64,
    pub sector: Option<Parity>,
    pub seed: u64,
}

impl Default for GapOptions {
    fn default() -> Self {
        GapOptions {
            tau: 1.0,
            krylov_dim: 60,
            residual_tol: 1e-6,
            tail_threshold: 0.05,
            sector: None,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RitzValue {
    pub re: f64,
    pub im: f64,
    pub residual: f64,
    pub tail_mass: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GapEstimate {
    pub gap: f64,
    pub eigenvalue: (f64, f64),
    pub sector: Option<Parity>,
    /// Converged pairs sorted by real part, whether or not they passed the tail filter.
    pub candidates: Vec<RitzValue>,
}

fn project(basis: &SpectralBasis, sector: Option<Parity>, v: &mut [f64]) {
    v[0] = 0.0;
    if let Some(s) = sector {
        let want = if s == Parity::Even { 1 } else { -1 };
        for (i, x) in v.iter_mut().enumerate() {
            if basis.parity(i) != want {
                *x = 0.0;
            }
        }
    }
}

type C64 = Complex<f64>;

fn ritz_vector(h: &DMatrix<f64>, theta: C64) -> DVector<C64> {
    let k = h.nrows();
    let mut a: DMatrix<C64> = h.map(|x| C64::new(x, 0.0));
    // slight offset keeps the shifted matrix invertible
    let shift = theta + C64::new(1e-13 * theta.norm().max(1e-300), 0.0);
    for i in 0..k {
        a[(i, i)] -= shift;
    }
    let lu = a.lu();
    let mut y = DVector::from_element(k, C64::new(1.0, 0.0));
    for _ in 0..3 {
        match lu.solve(&y) {
            Some(s) => {
                let n = s.norm();
                y = s / C64::new(n, 0.0);
            }
            None => break,
        }
    }
    y
}

pub fn spectral_gap(l: &OperatorMatrix, basis: &SpectralBasis, opts: GapOptions) -> Result<GapEstimate> {
    l.check_basis(basis)?;
    if opts.sector.is_some() && !basis.q.is_even_symmetric() {
        return Err(GleError::Unsupported("parity sectors need an even potential".into()));
    }
    let n = basis.dim();
    let k = opts.krylov_dim.min(n.saturating_sub(1)).max(2);
    let mut v0 = random_smooth_state(basis, opts.seed);
    // a rougher start so that every part of the sector is represented
    for (i, x) in v0.iter_mut().enumerate() {
        *x += 1e-3 * (((i as f64) * 0.618_033_988_75).fract() - 0.5);
    }
    project(basis, opts.sector, &mut v0);
    let nv = norm2(&v0);
    if nv == 0.0 {
        return Err(GleError::Precondition("selected sector is empty".into()));
    }
    v0.iter_mut().for_each(|x| *x /= nv);
    let mut vs = vec![v0];
    let mut h = DMatrix::<f64>::zeros(k + 1, k);
    let mut dim = k;
    for j in 0..k {
        let mut w = semigroup_apply(l, &vs[j], opts.tau)?;
        project(basis, opts.sector, &mut w);
        for _ in 0..2 {
            for (i, vi) in vs.iter().enumerate() {
                let c = dot(vi, &w);
                h[(i, j)] += c;
                axpy(-c, vi, &mut w);
            }
        }
        let nw = norm2(&w);
        h[(j + 1, j)] = nw;
        if nw < 1e-12 {
            dim = j + 1;
            break;
        }
        w.iter_mut().for_each(|x| *x /= nw);
        vs.push(w);
    }
    let hk = h.view((0, 0), (dim, dim)).into_owned();
    let hnext = h[(dim, dim - 1)];
    let thetas = hk.complex_eigenvalues();
    let mut cands = Vec::new();
    for theta in thetas.iter() {
        if theta.norm() < 1e-10 {
            continue;
        }
        let y = ritz_vector(&hk, *theta);
        let residual = hnext * y[dim - 1].norm() / theta.norm();
        if residual > opts.residual_tol {
            continue;
        }
        let mut re = vec![0.0; n];
        let mut im = vec![0.0; n];
        for (c, vi) in y.iter().zip(&vs) {
            axpy(c.re, vi, &mut re);
            axpy(c.im, vi, &mut im);
        }
        let total = dot(&re, &re) + dot(&im, &im);
        let tail = (basis.tail_mass(&re) * dot(&re, &re) + basis.tail_mass(&im) * dot(&im, &im)) / total;
        let mu = -theta.ln() / opts.tau;
        cands.push(RitzValue {
            re: mu.re,
            im: mu.im,
            residual,
            tail_mass: tail,
        });
    }
    cands.sort_by(|a, b| a.re.total_cmp(&b.re));
    let best = cands
        .iter()
        .find(|c| c.tail_mass <= opts.tail_threshold)
        .ok_or_else(|| GleError::NoConvergence {
            solver: "exponential Arnoldi".into(),
            iterations: dim,
            residual: hnext,
        })?;
    if !(best.re > 0.0) {
        return Err(GleError::Estimator(format!("non-positive gap {}", best.re)));
    }
    Ok(GapEstimate {
        gap: best.re,
        eigenvalue: (best.re, best.im),
        sector: opts.sector,
        candidates: cands.clone(),
    })
}

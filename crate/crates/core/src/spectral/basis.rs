//! Tensor basis orthonormal in `L²(μ_β)`, index layout `[q][p][z_1]..[z_m]`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::f64::consts::TAU;

use crate::error::{GleError, Result};
use crate::model::{DomainKind, GleModel, Potential};

/// Default cap on the tensor dimension.
pub const DEFAULT_MAX_DIM: usize = 400_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QBasisKind {
    /// Trigonometric polynomials of degree `≤ N_q`, Gram–Schmidt under `e^{−βV}dq`.
    Fourier,
    /// Hermite functions for a Gaussian `ρ_q`.
    Hermite,
}

/// One-dimensional basis in `q` together with the exact matrix of `∂_q`.
#[derive(Debug, Clone)]
pub struct QBasis {
    pub kind: QBasisKind,
    pub n_q: usize,
    /// `u_i = Σ_j coef[(i,j)] t_j` with `t = (1, cos q, sin q, cos 2q, ...)`.
    coef: DMatrix<f64>,
    /// `deriv[(i,j)] = ⟨u_i, ∂_q u_j⟩_ρ`.
    pub deriv: DMatrix<f64>,
    /// Hermite scale `√(βκ)`.
    scale: f64,
    density_norm: f64,
    beta: f64,
    potential: Potential,
}

fn trig(j: usize, q: f64) -> (f64, f64) {
    if j == 0 {
        return (1.0, 0.0);
    }
    let k = j.div_ceil(2) as f64;
    if j % 2 == 1 {
        ((k * q).cos(), -k * (k * q).sin())
    } else {
        ((k * q).sin(), k * (k * q).cos())
    }
}

/// Probabilists' Hermite functions normalized under `N(0,1)`: `h_0..h_n` at `x`.
pub fn hermite_values(n: usize, x: f64) -> Vec<f64> {
    let mut h = vec![0.0; n + 1];
    h[0] = 1.0;
    if n >= 1 {
        h[1] = x;
    }
    for k in 1..n {
        h[k + 1] = (x * h[k] - (k as f64).sqrt() * h[k - 1]) / ((k + 1) as f64).sqrt();
    }
    h
}

/// Gauss–Hermite nodes and weights for the standard normal (Golub–Welsch).
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut j = DMatrix::zeros(n, n);
    for k in 1..n {
        let b = (k as f64).sqrt();
        j[(k, k - 1)] = b;
        j[(k - 1, k)] = b;
    }
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

impl QBasis {
    pub fn fourier(n_q: usize, beta: f64, potential: &Potential) -> Result<Self> {
        if !potential.is_periodic() {
            return Err(GleError::Precondition("Fourier basis needs a 2π-periodic potential".into()));
        }
        let nq = 2 * n_q + 1;
        let nodes = 8 * n_q + 64;
        let h = TAU / nodes as f64;
        let vmin = potential.profile_min();
        let mut w: Vec<f64> = (0..nodes)
            .map(|i| (-beta * (potential.profile(i as f64 * h) - vmin)).exp())
            .collect();
        let z: f64 = w.iter().sum::<f64>() * h;
        if !z.is_finite() || z <= 0.0 || w.iter().any(|v| !v.is_finite()) {
            return Err(GleError::NonFinite("e^{−βV} is not integrable on the quadrature grid".into()));
        }
        w.iter_mut().for_each(|v| *v *= h / z);
        let mut t = DMatrix::zeros(nq, nodes);
        let mut dt = DMatrix::zeros(nq, nodes);
        for c in 0..nodes {
            let q = c as f64 * h;
            for j in 0..nq {
                let (v, d) = trig(j, q);
                t[(j, c)] = v;
                dt[(j, c)] = d;
            }
        }
        let mut tw = t.clone();
        for c in 0..nodes {
            tw.column_mut(c).scale_mut(w[c]);
        }
        let gram = &tw * t.transpose();
        let chol = gram
            .cholesky()
            .ok_or_else(|| GleError::NonFinite("trigonometric Gram matrix is not positive definite".into()))?;
        let coef = chol
            .l()
            .try_inverse()
            .ok_or_else(|| GleError::NonFinite("singular Cholesky factor".into()))?;
        let u = &coef * &t;
        let du = &coef * &dt;
        let mut uw = u.clone();
        for c in 0..nodes {
            uw.column_mut(c).scale_mut(w[c]);
        }
        let mut deriv = &uw * du.transpose();
        deriv.apply(|v| {
            if v.abs() < 1e-15 {
                *v = 0.0
            }
        });
        Ok(QBasis {
            kind: QBasisKind::Fourier,
            n_q,
            coef,
            deriv,
            scale: 0.0,
            density_norm: z,
            beta,
            potential: potential.clone(),
        })
    }

    /// Hermite basis for `V = κq²/2`, orthonormal under `N(0, 1/(βκ))`.
    pub fn hermite(n_q: usize, beta: f64, stiffness: f64) -> Self {
        let scale = (beta * stiffness).sqrt();
        let mut deriv = DMatrix::zeros(n_q + 1, n_q + 1);
        for k in 1..=n_q {
            deriv[(k - 1, k)] = scale * (k as f64).sqrt();
        }
        QBasis {
            kind: QBasisKind::Hermite,
            n_q,
            coef: DMatrix::identity(n_q + 1, n_q + 1),
            deriv,
            scale,
            density_norm: 1.0,
            beta,
            potential: Potential::quadratic(stiffness),
        }
    }

    pub fn len(&self) -> usize {
        match self.kind {
            QBasisKind::Fourier => 2 * self.n_q + 1,
            QBasisKind::Hermite => self.n_q + 1,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Frequency or Hermite degree of basis function `i`.
    pub fn degree(&self, i: usize) -> usize {
        match self.kind {
            QBasisKind::Fourier => i.div_ceil(2),
            QBasisKind::Hermite => i,
        }
    }

    /// Whether `q ↦ −q` preserves `ρ_q`, so that parity of the basis is meaningful.
    pub fn is_even_symmetric(&self) -> bool {
        match self.kind {
            QBasisKind::Fourier => self.potential.is_even(),
            QBasisKind::Hermite => true,
        }
    }

    /// `+1` for even functions of `q`, `−1` for odd.
    pub fn parity(&self, i: usize) -> i32 {
        let odd = match self.kind {
            QBasisKind::Fourier => i > 0 && i % 2 == 0,
            QBasisKind::Hermite => i % 2 == 1,
        };
        if odd {
            -1
        } else {
            1
        }
    }

    /// Values of all basis functions at `q`.
    pub fn eval(&self, q: f64) -> Vec<f64> {
        match self.kind {
            QBasisKind::Fourier => {
                let t: Vec<f64> = (0..self.len()).map(|j| trig(j, q).0).collect();
                (0..self.len())
                    .map(|i| (0..=i).map(|j| self.coef[(i, j)] * t[j]).sum())
                    .collect()
            }
            QBasisKind::Hermite => hermite_values(self.n_q, self.scale * q),
        }
    }

    /// Normalized marginal density `ρ_q`.
    pub fn density(&self, q: f64) -> f64 {
        match self.kind {
            QBasisKind::Fourier => {
                (-self.beta * (self.potential.profile(q) - self.potential.profile_min())).exp() / self.density_norm
            }
            QBasisKind::Hermite => self.scale / (TAU).sqrt() * (-0.5 * (self.scale * q).powi(2)).exp(),
        }
    }

    /// Quadrature nodes and `ρ_q`-weights, `n` points.
    pub fn quadrature(&self, n: usize) -> (Vec<f64>, Vec<f64>) {
        match self.kind {
            QBasisKind::Fourier => {
                let h = TAU / n as f64;
                let x: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
                let mut w: Vec<f64> = x.iter().map(|&q| self.density(q) * h).collect();
                let s: f64 = w.iter().sum();
                w.iter_mut().for_each(|v| *v /= s);
                (x, w)
            }
            QBasisKind::Hermite => {
                let (x, w) = gauss_hermite(n);
                (x.into_iter().map(|v| v / self.scale).collect(), w)
            }
        }
    }

    /// Coefficients `⟨u_i, f⟩_ρ`.
    pub fn project(&self, f: &dyn Fn(f64) -> f64) -> Vec<f64> {
        let n = match self.kind {
            QBasisKind::Fourier => 16 * self.n_q + 256,
            QBasisKind::Hermite => 2 * self.n_q + 64,
        };
        let (x, w) = self.quadrature(n);
        let mut c = vec![0.0; self.len()];
        for (q, wq) in x.iter().zip(&w) {
            let fv = f(*q) * wq;
            for (ci, ui) in c.iter_mut().zip(self.eval(*q)) {
                *ci += fv * ui;
            }
        }
        c
    }
}

/// Tensor basis `u_{i}(q) h_{n_p}(√β p) Π_j h_{n_j}(√β z_j)`.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    pub q: QBasis,
    pub n_p: usize,
    pub n_z: usize,
    pub m: usize,
    pub beta: f64,
    dims: Vec<usize>,
    strides: Vec<usize>,
    fingerprint: String,
}

#[derive(Serialize)]
struct Descriptor<'a> {
    q_kind: QBasisKind,
    n_q: usize,
    n_p: usize,
    n_z: usize,
    m: usize,
    beta: f64,
    model: &'a str,
}

impl SpectralBasis {
    pub fn new(model: &GleModel, n_q: usize, n_p: usize, n_z: usize) -> Result<Self> {
        Self::with_budget(model, n_q, n_p, n_z, DEFAULT_MAX_DIM)
    }

    pub fn with_budget(model: &GleModel, n_q: usize, n_p: usize, n_z: usize, max_dim: usize) -> Result<Self> {
        if model.d != 1 {
            return Err(GleError::Unsupported("spectral discretization is implemented for d = 1".into()));
        }
        if model.m > 2 {
            return Err(GleError::Unsupported("spectral discretization is implemented for m ≤ 2".into()));
        }
        let q = match (model.domain_kind, &model.potential) {
            (DomainKind::Torus, pot) => QBasis::fourier(n_q, model.beta, pot)?,
            (DomainKind::Confining, Potential::Quadratic { stiffness }) => QBasis::hermite(n_q, model.beta, *stiffness),
            (DomainKind::Confining, _) => {
                return Err(GleError::Unsupported("confining spectral basis needs a quadratic potential".into()))
            }
        };
        let mut dims = vec![q.len(), n_p + 1];
        dims.extend(std::iter::repeat_n(n_z + 1, model.m));
        let total = dims.iter().try_fold(1u64, |acc, &d| acc.checked_mul(d as u64)).unwrap_or(u64::MAX);
        if total > max_dim as u64 {
            return Err(GleError::Budget {
                what: "spectral basis dimension".into(),
                requested: total,
                limit: max_dim as u64,
            });
        }
        let mut strides = vec![1; dims.len()];
        for k in (0..dims.len() - 1).rev() {
            strides[k] = strides[k + 1] * dims[k + 1];
        }
        let desc = Descriptor {
            q_kind: q.kind,
            n_q,
            n_p,
            n_z,
            m: model.m,
            beta: model.beta,
            model: &model.fingerprint(),
        };
        let digest = Sha256::digest(serde_json::to_vec(&desc).expect("descriptor serializes"));
        Ok(SpectralBasis {
            q,
            n_p,
            n_z,
            m: model.m,
            beta: model.beta,
            dims,
            strides,
            fingerprint: hex::encode(&digest[..8]),
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    /// Flat index of `(i_q, n_p, n_z...)`.
    pub fn index(&self, iq: usize, np: usize, nz: &[usize]) -> usize {
        let mut idx = iq * self.strides[0] + np * self.strides[1];
        for (j, &n) in nz.iter().enumerate() {
            idx += n * self.strides[2 + j];
        }
        idx
    }

    /// Inverse of [`index`](Self::index): `[i_q, n_p, n_z1, ...]`.
    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for k in 0..self.dims.len() {
            out[k] = idx / self.strides[k];
            idx %= self.strides[k];
        }
        out
    }

    /// The constant function `1`.
    pub fn constant(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.dim()];
        v[0] = 1.0;
        v
    }

    /// `ρ`-mean `⟨1, u⟩`.
    pub fn mean(&self, u: &[f64]) -> f64 {
        u[0]
    }

    /// Coefficients of `p^k` for `k ≤ 2`.
    pub fn momentum_power(&self, k: usize) -> Result<Vec<f64>> {
        let mut v = vec![0.0; self.dim()];
        match k {
            0 => v[0] = 1.0,
            1 if self.n_p >= 1 => v[self.index(0, 1, &vec![0; self.m])] = 1.0 / self.beta.sqrt(),
            2 if self.n_p >= 2 => {
                v[0] = 1.0 / self.beta;
                v[self.index(0, 2, &vec![0; self.m])] = 2f64.sqrt() / self.beta;
            }
            _ => return Err(GleError::Precondition(format!("p^{k} not representable with N_p = {}", self.n_p))),
        }
        Ok(v)
    }

    /// Tensor product of a q-coefficient vector with the ground states in `p, z`.
    pub fn q_function(&self, cq: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.dim()];
        for (i, c) in cq.iter().enumerate() {
            v[i * self.strides[0]] = *c;
        }
        v
    }

    /// Parity of each basis function under `(q, p, z) ↦ −(q, p, z)`.
    pub fn parity(&self, idx: usize) -> i32 {
        let mi = self.multi_index(idx);
        let hermite: usize = mi[1..].iter().sum();
        self.q.parity(mi[0]) * if hermite % 2 == 0 { 1 } else { -1 }
    }

    /// Fraction of `‖u‖²` on functions whose degree in some direction exceeds
    /// three quarters of the truncation.
    pub fn tail_mass(&self, u: &[f64]) -> f64 {
        let cut = |n: usize| (3 * n).div_ceil(4).max(1);
        let (cq, cp, cz) = (cut(self.q.n_q), cut(self.n_p), cut(self.n_z));
        let mut tail = 0.0;
        let mut total = 0.0;
        for (idx, c) in u.iter().enumerate() {
            let c2 = c * c;
            total += c2;
            let mi = self.multi_index(idx);
            if self.q.degree(mi[0]) > cq || mi[1] > cp || mi[2..].iter().any(|&n| n > cz) {
                tail += c2;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            tail / total
        }
    }

    /// Combined degree used for diagonal preconditioning.
    pub fn degree(&self, idx: usize) -> usize {
        let mi = self.multi_index(idx);
        self.q.degree(mi[0]) + mi[1..].iter().sum::<usize>()
    }

    /// Largest deviation of the Gram matrix from the identity on the first
    /// `subset` functions along each axis, by fresh quadrature.
    pub fn orthonormality_defect(&self, subset: usize) -> f64 {
        let mut worst: f64 = 0.0;
        let nq = subset.min(self.q.len());
        let (x, w) = self.q.quadrature(match self.q.kind {
            QBasisKind::Fourier => 24 * self.q.n_q + 301,
            QBasisKind::Hermite => self.q.n_q + 40,
        });
        let mut g = DMatrix::<f64>::zeros(nq, nq);
        for (q, wq) in x.iter().zip(&w) {
            let u = self.q.eval(*q);
            for i in 0..nq {
                for j in 0..nq {
                    g[(i, j)] += wq * u[i] * u[j];
                }
            }
        }
        worst = worst.max((g - DMatrix::identity(nq, nq)).abs().max());
        let nh = subset.min(self.n_p.max(self.n_z) + 1);
        let (x, w) = gauss_hermite(nh + 20);
        let mut g = DMatrix::<f64>::zeros(nh, nh);
        for (xi, wi) in x.iter().zip(&w) {
            let h = hermite_values(nh - 1, *xi);
            for i in 0..nh {
                for j in 0..nh {
                    g[(i, j)] += wi * h[i] * h[j];
                }
            }
        }
        worst.max((g - DMatrix::identity(nh, nh)).abs().max())
    }
}

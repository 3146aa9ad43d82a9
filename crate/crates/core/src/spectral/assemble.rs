//! Galerkin matrices of `L = B + A*A` and of the derivative fields `A, C, C₂`.

use rayon::prelude::*;
use serde::Serialize;

use super::basis::SpectralBasis;
use crate::error::{GleError, Result};
use crate::linalg::{CsrMatrix, LinearOperator};
use crate::model::GleModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OperatorTag {
    L,
    /// `L*` in `L²(ρ)`; evolves density ratios `f/ρ`.
    LAdjoint,
    B,
    /// `A*A`.
    S,
    A,
    C,
    C2,
    Dq,
    Dp,
    Dz,
}

/// Sparse operator in a [`SpectralBasis`]. Vector fields with `m` components
/// are stacked row-wise, so `‖Xu‖` is the Euclidean norm over components.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub tag: OperatorTag,
    pub matrix: CsrMatrix,
    pub components: usize,
    pub basis_fingerprint: String,
}

impl OperatorMatrix {
    fn new(tag: OperatorTag, matrix: CsrMatrix, components: usize, basis: &SpectralBasis) -> Self {
        OperatorMatrix {
            tag,
            matrix,
            components,
            basis_fingerprint: basis.fingerprint().to_string(),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn check_basis(&self, basis: &SpectralBasis) -> Result<()> {
        if self.basis_fingerprint != basis.fingerprint() {
            return Err(GleError::Precondition(format!(
                "{:?} was assembled on basis {} but used with {}",
                self.tag,
                self.basis_fingerprint,
                basis.fingerprint()
            )));
        }
        Ok(())
    }

    pub fn apply_vec(&self, u: &[f64]) -> Vec<f64> {
        self.matrix.apply_vec(u)
    }
}

impl LinearOperator for OperatorMatrix {
    fn nrows(&self) -> usize {
        self.matrix.nrows()
    }
    fn ncols(&self) -> usize {
        self.matrix.ncols()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matrix.apply(x, y)
    }
}

/// Lowering operator `a h_n = √n h_{n−1}` on degrees `0..=n`.
fn lowering(n: usize) -> CsrMatrix {
    let t: Vec<_> = (1..=n).map(|k| (k - 1, k, (k as f64).sqrt())).collect();
    CsrMatrix::from_triplets(n + 1, n + 1, &t)
}

fn number(n: usize) -> CsrMatrix {
    CsrMatrix::diagonal(&(0..=n).map(|k| k as f64).collect::<Vec<_>>())
}

struct Axes<'a> {
    basis: &'a SpectralBasis,
    ids: Vec<CsrMatrix>,
}

impl<'a> Axes<'a> {
    fn new(basis: &'a SpectralBasis) -> Self {
        let ids = basis.dims().iter().map(|&d| CsrMatrix::identity(d)).collect();
        Axes { basis, ids }
    }

    /// Kronecker product with `factors` placed on the given axes.
    fn kron(&self, factors: &[(usize, &CsrMatrix)]) -> CsrMatrix {
        let mats: Vec<&CsrMatrix> = (0..self.ids.len())
            .map(|ax| factors.iter().find(|f| f.0 == ax).map(|f| f.1).unwrap_or(&self.ids[ax]))
            .collect();
        CsrMatrix::kron_all(&mats)
    }

    fn dq(&self) -> CsrMatrix {
        CsrMatrix::from_dense(&self.basis.q.deriv)
    }
}

fn check_model(model: &GleModel, basis: &SpectralBasis) -> Result<()> {
    if model.m != basis.m || (model.beta - basis.beta).abs() > 0.0 {
        return Err(GleError::Precondition("model and basis disagree on m or β".into()));
    }
    Ok(())
}

/// Transport `B = −p∂_q + V′∂_p − Σλ_j(z_j∂_p − p∂_{z_j})`; exactly antisymmetric.
pub fn assemble_transport(model: &GleModel, basis: &SpectralBasis) -> Result<OperatorMatrix> {
    check_model(model, basis)?;
    let ax = Axes::new(basis);
    let s = basis.beta.sqrt();
    let d = ax.dq();
    let dt = d.transpose();
    let ap = lowering(basis.n_p);
    let apt = ap.transpose();
    let az = lowering(basis.n_z);
    let azt = az.transpose();
    // −p∂_q + V′∂_p = −(1/s)(∂_q ⊗ a†_p − ∂_q* ⊗ a_p)
    let mut b = ax
        .kron(&[(0, &d), (1, &apt)])
        .sub(&ax.kron(&[(0, &dt), (1, &ap)]))
        .scale(-1.0 / s);
    let parts: Vec<CsrMatrix> = (0..model.m)
        .into_par_iter()
        .map(|j| {
            ax.kron(&[(1, &apt), (2 + j, &az)])
                .sub(&ax.kron(&[(1, &ap), (2 + j, &azt)]))
                .scale(model.lambda[j])
        })
        .collect();
    for p in parts {
        b = b.add(&p);
    }
    Ok(OperatorMatrix::new(OperatorTag::B, b, 1, basis))
}

/// `A*A = Σ α_j N_{z_j}`.
pub fn assemble_dissipation(model: &GleModel, basis: &SpectralBasis) -> Result<OperatorMatrix> {
    check_model(model, basis)?;
    let ax = Axes::new(basis);
    let nz = number(basis.n_z);
    let mut s = CsrMatrix::zeros(basis.dim(), basis.dim());
    for j in 0..model.m {
        s = s.add(&ax.kron(&[(2 + j, &nz)]).scale(model.alpha[j]));
    }
    Ok(OperatorMatrix::new(OperatorTag::S, s, 1, basis))
}

/// Matrix of `L = −(generator)` in the orthonormal basis.
pub fn assemble_generator(model: &GleModel, basis: &SpectralBasis) -> Result<OperatorMatrix> {
    let b = assemble_transport(model, basis)?;
    let s = assemble_dissipation(model, basis)?;
    Ok(OperatorMatrix::new(OperatorTag::L, b.matrix.add(&s.matrix), 1, basis))
}

/// `L* = −B + A*A`.
pub fn assemble_adjoint(model: &GleModel, basis: &SpectralBasis) -> Result<OperatorMatrix> {
    let b = assemble_transport(model, basis)?;
    let s = assemble_dissipation(model, basis)?;
    Ok(OperatorMatrix::new(OperatorTag::LAdjoint, s.matrix.sub(&b.matrix), 1, basis))
}

/// Coordinate derivatives `∂_q`, `∂_p`, `∂_{z_j}` (the last stacked over `j`).
pub fn coordinate_derivative(basis: &SpectralBasis, tag: OperatorTag) -> Result<OperatorMatrix> {
    let ax = Axes::new(basis);
    let s = basis.beta.sqrt();
    let mat = match tag {
        OperatorTag::Dq => ax.kron(&[(0, &ax.dq())]),
        OperatorTag::Dp => ax.kron(&[(1, &lowering(basis.n_p))]).scale(s),
        OperatorTag::Dz => {
            let az = lowering(basis.n_z);
            stack(&(0..basis.m).map(|j| ax.kron(&[(2 + j, &az)]).scale(s)).collect::<Vec<_>>())
        }
        other => return Err(GleError::Precondition(format!("{other:?} is not a coordinate derivative"))),
    };
    let comps = if tag == OperatorTag::Dz { basis.m } else { 1 };
    Ok(OperatorMatrix::new(tag, mat, comps, basis))
}

fn stack(blocks: &[CsrMatrix]) -> CsrMatrix {
    let ncols = blocks[0].ncols();
    let mut trip = Vec::new();
    let mut off = 0;
    for b in blocks {
        trip.extend(b.triplets().into_iter().map(|(i, j, v)| (i + off, j, v)));
        off += b.nrows();
    }
    CsrMatrix::from_triplets(off, ncols, &trip)
}

/// The fields `A_j = −√(α_j/β)∂_{z_j}`, `C_j = [A_j, B]` and `C₂_j = [C_j, B]`.
#[derive(Debug, Clone)]
pub struct DerivativeOps {
    pub a: OperatorMatrix,
    pub c: OperatorMatrix,
    pub c2: OperatorMatrix,
}

impl DerivativeOps {
    pub fn get(&self, k: usize) -> &OperatorMatrix {
        match k {
            0 => &self.a,
            1 => &self.c,
            _ => &self.c2,
        }
    }
}

pub fn derivative_ops(model: &GleModel, basis: &SpectralBasis) -> Result<DerivativeOps> {
    check_model(model, basis)?;
    let dq = coordinate_derivative(basis, OperatorTag::Dq)?.matrix;
    let dp = coordinate_derivative(basis, OperatorTag::Dp)?.matrix;
    let ax = Axes::new(basis);
    let az = lowering(basis.n_z);
    let s = basis.beta.sqrt();
    let dz: Vec<CsrMatrix> = (0..model.m).map(|j| ax.kron(&[(2 + j, &az)]).scale(s)).collect();
    let w: Vec<f64> = (0..model.m).map(|j| (model.alpha[j] / model.beta).sqrt()).collect();
    let a = stack(&(0..model.m).map(|j| dz[j].scale(-w[j])).collect::<Vec<_>>());
    let c = stack(&(0..model.m).map(|j| dp.scale(model.lambda[j] * w[j])).collect::<Vec<_>>());
    let mut zsum = dq.scale(-1.0);
    for j in 0..model.m {
        zsum = zsum.add(&dz[j].scale(model.lambda[j]));
    }
    let c2 = stack(&(0..model.m).map(|j| zsum.scale(model.lambda[j] * w[j])).collect::<Vec<_>>());
    Ok(DerivativeOps {
        a: OperatorMatrix::new(OperatorTag::A, a, model.m, basis),
        c: OperatorMatrix::new(OperatorTag::C, c, model.m, basis),
        c2: OperatorMatrix::new(OperatorTag::C2, c2, model.m, basis),
    })
}

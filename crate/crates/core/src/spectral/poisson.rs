//! Mean-zero Poisson problem `Lφ = f` and the diffusion functional.

use serde::Serialize;

use super::assemble::{OperatorMatrix, OperatorTag};
use super::basis::SpectralBasis;
use crate::error::{GleError, Result};
use crate::linalg::{dot, gmres, norm2, GmresOptions, LinearOperator};
use crate::model::GleModel;

#[derive(Debug, Clone, Copy)]
pub struct PoissonOptions {
    pub rtol: f64,
    pub restart: usize,
    pub max_iter: usize,
}

impl Default for PoissonOptions {
    fn default() -> Self {
        PoissonOptions {
            rtol: 1e-10,
            restart: 150,
            max_iter: 40_000,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PoissonSolution {
    pub phi: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
    pub basis_fingerprint: String,
}

/// `L` restricted to the orthogonal complement of constants.
struct MeanZero<'a>(&'a OperatorMatrix);

impl LinearOperator for MeanZero<'_> {
    fn nrows(&self) -> usize {
        self.0.nrows()
    }
    fn ncols(&self) -> usize {
        self.0.ncols()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let mut xp = x.to_vec();
        xp[0] = 0.0;
        self.0.apply(&xp, y);
        y[0] = 0.0;
    }
}

pub fn solve_poisson(
    l: &OperatorMatrix,
    basis: &SpectralBasis,
    rhs: &[f64],
    opts: PoissonOptions,
) -> Result<PoissonSolution> {
    if l.tag != OperatorTag::L {
        return Err(GleError::Precondition(format!("expected L, got {:?}", l.tag)));
    }
    l.check_basis(basis)?;
    if rhs.len() != basis.dim() {
        return Err(GleError::Dimension(format!("rhs has {} entries, basis {}", rhs.len(), basis.dim())));
    }
    let mean = basis.mean(rhs);
    if mean.abs() > 1e-12 {
        return Err(GleError::Precondition(format!("rhs has ρ-mean {mean:e}; Poisson problem is not solvable")));
    }
    let mut b = rhs.to_vec();
    b[0] = 0.0;
    // diagonal of L plus the Hermite degree keeps the scaling near the true diagonal
    let diag = l.matrix.diag();
    let scale: Vec<f64> = (0..basis.dim())
        .map(|i| if i == 0 { 0.0 } else { 1.0 / (diag[i].abs() + basis.degree(i) as f64).max(1.0) })
        .collect();
    let precond = |v: &mut [f64]| v.iter_mut().zip(&scale).for_each(|(x, s)| *x *= s);
    let out = gmres(
        &MeanZero(l),
        &b,
        &precond,
        GmresOptions {
            rtol: opts.rtol,
            restart: opts.restart,
            max_iter: opts.max_iter,
        },
    )?;
    let mut phi = out.x;
    phi[0] = 0.0;
    let r = l.apply_vec(&phi);
    let bn = norm2(&b);
    let res = if bn == 0.0 {
        0.0
    } else {
        norm2(&r.iter().zip(&b).map(|(a, c)| a - c).collect::<Vec<_>>()) / bn
    };
    if res > 1e-8 {
        return Err(GleError::NoConvergence {
            solver: "poisson gmres".into(),
            iterations: out.iterations,
            residual: res,
        });
    }
    Ok(PoissonSolution {
        phi,
        iterations: out.iterations,
        relative_residual: res,
        basis_fingerprint: basis.fingerprint().to_string(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DiffusionReport {
    /// `β⁻¹ Σ_j α_j ‖∂_{z_j}φ‖²`.
    pub d: f64,
    /// `⟨φ, p⟩_ρ`, equal to `d` for an exact Galerkin solution.
    pub d_pairing: f64,
    /// `(4/β) Σ α_j/λ_j²`.
    pub upper_bound: f64,
    pub bound_holds: bool,
}

pub fn diffusion_from_poisson(sol: &PoissonSolution, basis: &SpectralBasis, model: &GleModel) -> Result<DiffusionReport> {
    if sol.basis_fingerprint != basis.fingerprint() {
        return Err(GleError::Precondition("φ was computed on a different basis".into()));
    }
    // β⁻¹ α ‖∂_z φ‖² = α Σ n_z |c|² in the Hermite basis
    let mut d = 0.0;
    for (idx, c) in sol.phi.iter().enumerate() {
        if *c == 0.0 {
            continue;
        }
        let mi = basis.multi_index(idx);
        for j in 0..model.m {
            d += model.alpha[j] * mi[2 + j] as f64 * c * c;
        }
    }
    let d_pairing = dot(&sol.phi, &basis.momentum_power(1)?);
    if !(d > 0.0) || !d.is_finite() {
        return Err(GleError::Estimator(format!(
            "diffusion functional {d:e} is not positive; the basis does not resolve φ"
        )));
    }
    let upper_bound = 4.0 / model.beta * (0..model.m).map(|j| model.alpha[j] / model.lambda[j].powi(2)).sum::<f64>();
    Ok(DiffusionReport {
        d,
        d_pairing,
        upper_bound,
        bound_holds: d <= upper_bound,
    })
}

//! Fourier/Hermite Galerkin discretization of the generator.

mod assemble;
mod basis;
mod export;
mod gap;
mod poisson;
mod semigroup;

pub use assemble::{
    assemble_adjoint, assemble_dissipation, assemble_generator, assemble_transport, coordinate_derivative,
    derivative_ops, DerivativeOps, OperatorMatrix, OperatorTag,
};
pub use basis::{gauss_hermite, hermite_values, QBasis, QBasisKind, SpectralBasis, DEFAULT_MAX_DIM};
pub use export::{write_coefficients, write_triplets, BasisDescriptor};
pub use gap::{spectral_gap, GapEstimate, GapOptions, Parity, RitzValue};
pub use poisson::{diffusion_from_poisson, solve_poisson, DiffusionReport, PoissonOptions, PoissonSolution};
pub use semigroup::{
    derivative_operator_norm, random_smooth_state, semigroup_apply, semigroup_series, short_time_scan, ShortTimeScan,
    SEMIGROUP_TOL,
};

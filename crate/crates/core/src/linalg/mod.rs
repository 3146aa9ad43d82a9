//! Sparse matrices and the iterative kernels built on them.

mod dense;
mod gmres;
mod krylov;
mod sparse;

pub use dense::{psd_sqrt, van_loan};
pub use gmres::{gmres, GmresOptions, GmresOutcome};
pub use krylov::{expm_neg_apply, KrylovOptions, KrylovOutcome};
pub use sparse::{axpy, dot, norm2, CsrMatrix, LinearOperator};

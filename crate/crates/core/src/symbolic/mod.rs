//! Exact operator algebra with `V` kept as an opaque symbol.

mod commutators;
mod diffop;
mod poly;

pub use commutators::{
    commutator_table, forward_generator, generator_decomposition_holds, transport, IdentityCheck, UnitOperators,
};
pub use diffop::{Deriv, DiffOp};
pub use poly::{rat, Monomial, Poly, Var};

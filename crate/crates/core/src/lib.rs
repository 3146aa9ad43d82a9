//! Simulation and spectral verification of the quasi-Markovian generalized Langevin equation.

pub mod error;
pub mod config;
pub mod dynamics;
pub mod equilibrium;
pub mod estimators;
pub mod experiments;
pub mod io;
pub mod linalg;
pub mod model;
pub mod spectral;
pub mod stats;
pub mod symbolic;

pub use error::{GleError, Result};
pub use model::{kernel_eval, kernel_mass, DomainKind, GleModel, Potential, State};

//! Macroscopic quantities from trajectory ensembles.

mod correlation;
mod decay;
mod green_kubo;
mod msd;
mod strong;

pub use correlation::{autocorrelation, mean_squared_displacement};
pub use decay::{fit_exponential_decay, DecayFit};
pub use green_kubo::{green_kubo, green_kubo_analytic, GreenKuboOptions};
pub use msd::{msd_diffusion, velocity_autocorrelation, MsdOptions, MSD_MAX_SLOPE_DRIFT, MSD_MIN_R2};
pub use strong::{strong_error, sup_discrepancies};

//! Gibbs sampling, distances to equilibrium and the Lyapunov drift check.

mod gibbs;

pub use gibbs::{sample_gibbs, GibbsSample, GibbsSampler, QStrategy};
mod divergence;

pub use divergence::{
    divergence_report, estimate_fisher, estimate_l1, estimate_relative_entropy, reference_cells, Axis, Binning,
    BootstrapOptions, DivergenceReport, Marginal, MarginalHistogram,
};
mod lyapunov;

pub use lyapunov::{drift_proposal, fit_confining_spec, lyapunov_drift_check, symbolic_drift_residual, symbolic_g, DriftReport, LyapunovForm, LyapunovSpec, RadiusBin};

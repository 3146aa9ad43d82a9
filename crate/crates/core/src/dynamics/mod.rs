//! Time integration of the extended system and of its white-noise limit.

mod integrator;
mod langevin;
mod noise;
mod paths;

pub use integrator::{step_em, step_splitting, Integrator, IntegratorScheme, OuBlock, SchemeKind};
pub use langevin::{simulate_langevin, LangevinSystem, LimitNoise};
pub use noise::{box_muller, stream_id, GaussianStream, NoisePath, NoiseTag, StreamKind};
pub use paths::{export_trajectories, simulate_paths, step_count, Ensemble, InitialCondition, PathOptions, Trajectory};

use crate::error::{GleError, Result};
use crate::model::GleModel;

/// `λⱼ → λⱼ/√ε`, `αⱼ → αⱼ/ε`.
pub fn rescale_whitenoise(model: &GleModel, epsilon: f64) -> Result<GleModel> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(GleError::domain("epsilon", "must be > 0"));
    }
    let mut out = model.clone();
    let s = epsilon.sqrt();
    out.lambda.iter_mut().for_each(|l| *l /= s);
    out.alpha.iter_mut().for_each(|a| *a /= epsilon);
    Ok(out)
}

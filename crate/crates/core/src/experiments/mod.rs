//! End-to-end experiment pipelines and their reports.
//!
//! Each `run_*` takes a validated [`RunConfig`], fills in defaults for its own
//! experiment block and returns an [`ExperimentReport`] whose verdicts are
//! numbered after the acceptance criteria in the README.

mod checks;
mod homogenization;
mod relaxation;
mod report;
mod short_time;
mod spectral_runs;
mod whitenoise;

pub use checks::{friction_formula_check, run_check, run_commutators, FrictionCheck};
pub use homogenization::run_homogenization;
pub use relaxation::{gibbs_potential_mean, run_relaxation};
pub use report::{ExperimentReport, Series, Target, Verdict, REPORT_FILE, TIMING_FILE};
pub use short_time::run_short_time;
pub use spectral_runs::{run_lyapunov, run_poisson, run_simulate};
pub use whitenoise::run_whitenoise;

use std::path::Path;
use std::time::Instant;

use crate::config::{parse_config, RunConfig};
use crate::error::{GleError, Result};
use crate::io::ArtifactWriter;

/// Experiment kinds accepted by [`run_experiment`].
pub const KINDS: [&str; 9] = [
    "simulate",
    "homogenization",
    "whitenoise",
    "relaxation",
    "short_time",
    "poisson",
    "commutators",
    "lyapunov",
    "check",
];

/// Cosine potential on the circle with `λ = α = β = 1`.
pub fn default_config() -> RunConfig {
    parse_config(
        r#"
[model]
lambda = [1.0]
alpha = [1.0]
potential = { kind = "cosine", amplitude = 1.0 }
"#,
    )
    .expect("built-in config is valid")
}

/// Runs one experiment and records its wall-clock time.
pub fn run_experiment(cfg: &RunConfig, kind: &str) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mut report = match kind {
        "simulate" => run_simulate(cfg),
        "homogenization" => run_homogenization(cfg),
        "whitenoise" => run_whitenoise(cfg),
        "relaxation" => run_relaxation(cfg),
        "short_time" => run_short_time(cfg),
        "poisson" => run_poisson(cfg),
        "commutators" => run_commutators(cfg),
        "lyapunov" => run_lyapunov(cfg),
        "check" => run_check(cfg),
        other => Err(GleError::Config {
            path: "experiment.kind".into(),
            reason: format!("unknown experiment '{other}'"),
        }),
    }?;
    report.wall_clock_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Runs `kind` and writes the effective config, report, series and manifest to `dir`.
pub fn run_and_persist(cfg: &RunConfig, kind: &str, dir: &Path) -> Result<ExperimentReport> {
    let effective = if kind == "commutators" { cfg.clone() } else { cfg.for_kind(kind)? };
    let report = run_experiment(&effective, kind)?;
    let mut w = ArtifactWriter::new(dir, &effective)?;
    report.persist(&mut w)?;
    w.finish()?;
    Ok(report)
}

//! Run configuration: TOML schema, validation and the effective-config hash.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::PI;
use std::path::PathBuf;

use crate::dynamics::{IntegratorScheme, SchemeKind};
use crate::equilibrium::Marginal;
use crate::error::{GleError, Result};
use crate::model::{DomainKind, GleModel, Potential};

fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "one_usize")]
    pub d: usize,
    pub lambda: Vec<f64>,
    pub alpha: Vec<f64>,
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default = "Potential::free")]
    pub potential: Potential,
    #[serde(default = "default_domain")]
    pub domain: DomainKind,
}

fn default_domain() -> DomainKind {
    DomainKind::Torus
}

impl ModelConfig {
    pub fn build(&self) -> Result<GleModel> {
        GleModel::new(
            self.d,
            self.lambda.clone(),
            self.alpha.clone(),
            self.beta,
            self.potential.clone(),
            self.domain,
        )
        .map_err(|e| match e {
            GleError::Domain { path, reason } => GleError::Domain {
                path: format!("model.{path}"),
                reason,
            },
            other => other,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsConfig {
    pub scheme: SchemeKind,
    pub dt: f64,
    pub horizon: f64,
    pub replicas: usize,
    /// Store every `stride`-th step of each trajectory.
    pub stride: usize,
    /// `(N_q, N_p, N_z)`.
    pub basis: [usize; 3],
}

impl Default for NumericsConfig {
    fn default() -> Self {
        NumericsConfig {
            scheme: SchemeKind::OuSplitting,
            dt: 0.05,
            horizon: 1000.0,
            replicas: 500,
            stride: 5,
            basis: [16, 16, 8],
        }
    }
}

impl NumericsConfig {
    pub fn scheme(&self) -> IntegratorScheme {
        match self.scheme {
            SchemeKind::EulerMaruyama => IntegratorScheme::euler_maruyama(self.dt),
            SchemeKind::OuSplitting => IntegratorScheme::ou_splitting(self.dt),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    /// Integrator steps summed over replicas, per experiment leg.
    pub max_total_steps: u64,
    pub max_replicas: usize,
    pub max_spectral_dim: usize,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        BudgetConfig {
            max_total_steps: 400_000_000,
            max_replicas: 2_000_000,
            max_spectral_dim: 20_000,
        }
    }
}

/// Initial law for off-equilibrium runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialLaw {
    Gibbs,
    /// Gibbs law with every position translated by `shift`.
    ShiftedGibbs { shift: f64 },
    Point { q: Vec<f64>, p: Vec<f64> },
}

fn default_epsilons() -> Vec<f64> {
    vec![0.1, 0.05, 0.025, 0.0125]
}
fn default_r() -> Vec<f64> {
    vec![2.0, 4.0]
}
fn default_shift() -> InitialLaw {
    InitialLaw::ShiftedGibbs { shift: PI }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExperimentConfig {
    Simulate {
        #[serde(default = "default_gibbs")]
        initial: InitialLaw,
        #[serde(default = "one_usize")]
        export_stride: usize,
    },
    Homogenization {
        #[serde(default)]
        msd_window: Option<[f64; 2]>,
        #[serde(default)]
        gk_horizon: Option<f64>,
    },
    Whitenoise {
        #[serde(default = "default_epsilons")]
        epsilons: Vec<f64>,
        #[serde(default = "default_r")]
        r: Vec<f64>,
        #[serde(default = "default_wn_horizon")]
        horizon: f64,
        /// Step size as a fraction of `ε`.
        #[serde(default = "default_dt_ratio")]
        dt_ratio: f64,
    },
    Relaxation {
        #[serde(default = "default_shift")]
        initial: InitialLaw,
        #[serde(default = "default_particles")]
        particles: usize,
        #[serde(default = "default_relax_horizon")]
        horizon: f64,
        #[serde(default = "default_record")]
        record_every: f64,
        #[serde(default = "default_marginal")]
        marginal: Marginal,
        #[serde(default = "default_bins")]
        bins: usize,
        /// Basis for the spectral-gap reference; the gap needs more momentum modes than transport does.
        #[serde(default = "default_gap_basis")]
        gap_basis: [usize; 3],
    },
    ShortTime {
        #[serde(default = "default_initial_count")]
        initial_data: usize,
        #[serde(default = "default_time_count")]
        times: usize,
        #[serde(default = "default_t_min")]
        t_min: f64,
    },
    Poisson {},
    Lyapunov {
        #[serde(default = "default_points")]
        points: usize,
        #[serde(default = "default_radius")]
        radius: f64,
    },
    Check {},
}

fn default_gibbs() -> InitialLaw {
    InitialLaw::Gibbs
}
fn default_wn_horizon() -> f64 {
    1.0
}
fn default_dt_ratio() -> f64 {
    0.02
}
fn default_particles() -> usize {
    1_000_000
}
fn default_relax_horizon() -> f64 {
    8.0
}
fn default_record() -> f64 {
    0.25
}
fn default_marginal() -> Marginal {
    Marginal::Q
}
fn default_bins() -> usize {
    64
}
fn default_gap_basis() -> [usize; 3] {
    [6, 32, 12]
}
fn default_initial_count() -> usize {
    10
}
fn default_time_count() -> usize {
    24
}
fn default_t_min() -> f64 {
    1e-3
}
fn default_points() -> usize {
    10_000
}
fn default_radius() -> f64 {
    12.0
}

impl ExperimentConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentConfig::Simulate { .. } => "simulate",
            ExperimentConfig::Homogenization { .. } => "homogenization",
            ExperimentConfig::Whitenoise { .. } => "whitenoise",
            ExperimentConfig::Relaxation { .. } => "relaxation",
            ExperimentConfig::ShortTime { .. } => "short_time",
            ExperimentConfig::Poisson {} => "poisson",
            ExperimentConfig::Lyapunov { .. } => "lyapunov",
            ExperimentConfig::Check {} => "check",
        }
    }

    /// Parameters for `kind` with every default filled in.
    pub fn defaults(kind: &str) -> Result<Self> {
        let text = format!("kind = \"{kind}\"");
        let de = toml::Deserializer::parse(&text).map_err(|e| GleError::Config {
            path: "experiment.kind".into(),
            reason: e.to_string(),
        })?;
        serde_path_to_error::deserialize(de).map_err(|e| GleError::Config {
            path: "experiment.kind".into(),
            reason: e.inner().to_string(),
        })
    }
}

fn default_seed() -> u64 {
    42
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,
    pub model: ModelConfig,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub budget: BudgetConfig,
    #[serde(default)]
    pub experiment: Option<ExperimentConfig>,
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let de = toml::Deserializer::parse(text).map_err(|e| GleError::Config {
        path: String::new(),
        reason: e.to_string(),
    })?;
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| GleError::Config {
        path: e.path().to_string(),
        reason: e.inner().to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    /// Physical and numerical constraints beyond the schema.
    pub fn validate(&self) -> Result<()> {
        self.model.build()?;
        let n = &self.numerics;
        if !(n.dt > 0.0 && n.dt.is_finite()) {
            return Err(GleError::domain("numerics.dt", "must be > 0"));
        }
        if !(n.horizon > 0.0 && n.horizon.is_finite()) {
            return Err(GleError::domain("numerics.horizon", "must be > 0"));
        }
        if n.replicas == 0 {
            return Err(GleError::domain("numerics.replicas", "must be ≥ 1"));
        }
        if n.replicas > self.budget.max_replicas {
            return Err(GleError::Budget {
                what: "replicas".into(),
                requested: n.replicas as u64,
                limit: self.budget.max_replicas as u64,
            });
        }
        if n.stride == 0 {
            return Err(GleError::domain("numerics.stride", "must be ≥ 1"));
        }
        match &self.experiment {
            Some(ExperimentConfig::Whitenoise { epsilons, r, horizon, dt_ratio }) => {
                for (i, e) in epsilons.iter().enumerate() {
                    if !(*e > 0.0 && e.is_finite()) {
                        return Err(GleError::domain(&format!("experiment.epsilons[{i}]"), "must be > 0"));
                    }
                }
                for (i, v) in r.iter().enumerate() {
                    if !(*v > 0.0) {
                        return Err(GleError::domain(&format!("experiment.r[{i}]"), "must be > 0"));
                    }
                }
                if !(*horizon > 0.0) {
                    return Err(GleError::domain("experiment.horizon", "must be > 0"));
                }
                if !(*dt_ratio > 0.0 && *dt_ratio <= 1.0) {
                    return Err(GleError::domain("experiment.dt_ratio", "must lie in (0, 1]"));
                }
            }
            Some(ExperimentConfig::Relaxation {
                particles,
                horizon,
                record_every,
                bins,
                ..
            }) => {
                if *particles == 0 || *particles > self.budget.max_replicas {
                    return Err(GleError::domain("experiment.particles", "must be ≥ 1 and within the replica budget"));
                }
                if !(*horizon > 0.0) || !(*record_every > 0.0) || *record_every > *horizon {
                    return Err(GleError::domain("experiment.record_every", "must lie in (0, horizon]"));
                }
                if *bins < 2 {
                    return Err(GleError::domain("experiment.bins", "must be ≥ 2"));
                }
            }
            Some(ExperimentConfig::ShortTime { initial_data, times, t_min }) => {
                if *initial_data == 0 {
                    return Err(GleError::domain("experiment.initial_data", "must be ≥ 1"));
                }
                if *times < 5 {
                    return Err(GleError::domain("experiment.times", "must be ≥ 5"));
                }
                if !(*t_min > 0.0 && *t_min < 1.0) {
                    return Err(GleError::domain("experiment.t_min", "must lie in (0, 1)"));
                }
            }
            Some(ExperimentConfig::Lyapunov { points, radius }) => {
                if *points == 0 || !(*radius > 0.0) {
                    return Err(GleError::domain("experiment.points", "points and radius must be positive"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Returns a copy whose experiment block is `kind`, filling defaults when absent.
    pub fn for_kind(&self, kind: &str) -> Result<RunConfig> {
        let mut cfg = self.clone();
        match &self.experiment {
            Some(e) if e.kind() != kind => {
                return Err(GleError::Config {
                    path: "experiment.kind".into(),
                    reason: format!("config describes '{}' but '{kind}' was requested", e.kind()),
                })
            }
            Some(_) => {}
            None => cfg.experiment = Some(ExperimentConfig::defaults(kind)?),
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// First 16 hex digits of the SHA-256 of the effective configuration.
    pub fn hash(&self) -> String {
        hex::encode(&Sha256::digest(self.to_toml().as_bytes())[..8])
    }

    pub fn model(&self) -> Result<GleModel> {
        self.model.build()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[model]
lambda = [1.0]
alpha = [1.0]
potential = { kind = "cosine", amplitude = 1.0 }
"#;

    #[test]
    fn minimal_config_fills_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.seed, 42);
        assert_eq!(c.model.beta, 1.0);
        assert_eq!(c.numerics, NumericsConfig::default());
        assert!(c.experiment.is_none());
        let k = c.for_kind("whitenoise").unwrap();
        match k.experiment.unwrap() {
            ExperimentConfig::Whitenoise { epsilons, r, .. } => {
                assert_eq!(epsilons.len(), 4);
                assert_eq!(r, vec![2.0, 4.0]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn negative_alpha_names_path() {
        let err = parse_config(&MINIMAL.replace("alpha = [1.0]", "alpha = [-1.0]")).unwrap_err();
        match err {
            GleError::Domain { path, .. } => assert!(path.ends_with("alpha[0]"), "{path}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_rejected_with_path() {
        let err = parse_config(&format!("{MINIMAL}\n[numerics]\ndt = 0.1\nbogus = 1\n")).unwrap_err();
        assert!(matches!(err, GleError::Config { .. }), "{err:?}");
        let err = parse_config(&format!("{MINIMAL}\n[numerics]\ndt = \"x\"\n")).unwrap_err();
        match err {
            GleError::Config { path, .. } => assert!(path.contains("numerics"), "{path}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn epsilon_and_beta_domain_errors() {
        let t = format!("{MINIMAL}\n[experiment]\nkind = \"whitenoise\"\nepsilons = [0.1, 0.0, 0.02]\n");
        assert!(matches!(parse_config(&t), Err(GleError::Domain { path, .. }) if path == "experiment.epsilons[1]"));
        let t = MINIMAL.replace("alpha = [1.0]", "alpha = [1.0]\nbeta = 0.0");
        assert!(matches!(parse_config(&t), Err(GleError::Domain { path, .. }) if path == "model.beta"));
    }

    #[test]
    fn round_trip_is_idempotent() {
        let c = parse_config(MINIMAL).unwrap().for_kind("relaxation").unwrap();
        let again = parse_config(&c.to_toml()).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.hash(), c.hash());
    }

    #[test]
    fn kind_mismatch_is_rejected() {
        let t = format!("{MINIMAL}\n[experiment]\nkind = \"poisson\"\n");
        let c = parse_config(&t).unwrap();
        assert!(c.for_kind("poisson").is_ok());
        assert!(matches!(c.for_kind("relaxation"), Err(GleError::Config { .. })));
    }
}

use std::fs;
use std::path::PathBuf;

use gle_core::config::{parse_config, ExperimentConfig, RunConfig};
use gle_core::io::{fmt_f64, verify_artifacts, write_columns, ArtifactWriter, EFFECTIVE_CONFIG};
use gle_core::{kernel_mass, GleError};
use proptest::prelude::*;

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn shipped_configs_parse_and_build() {
    let mut seen = 0;
    for entry in fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = parse_config(&fs::read_to_string(&path).unwrap()).unwrap_or_else(|e| panic!("{path:?}: {e}"));
            let model = cfg.model().unwrap();
            assert!(kernel_mass(&model) > 0.0);
            assert!(cfg.experiment.is_some(), "{path:?} names no experiment");
            seen += 1;
        }
    }
    assert!(seen >= 5);
}

#[test]
fn two_mode_example_has_the_stated_friction() {
    let cfg = parse_config(&fs::read_to_string(configs_dir().join("two_mode_check.toml")).unwrap()).unwrap();
    assert_eq!(kernel_mass(&cfg.model().unwrap()), 1.125);
}

const BASE: &str = "[model]\nlambda = [1.0, 2.0]\nalpha = [1.0, 3.0]\n";

#[test]
fn domain_errors_carry_the_offending_path() {
    for (text, path) in [
        (BASE.replace("alpha = [1.0, 3.0]", "alpha = [1.0, -3.0]"), "model.alpha[1]"),
        (BASE.replace("alpha = [1.0, 3.0]", "alpha = [0.0, 3.0]"), "model.alpha[0]"),
        (format!("{BASE}beta = -1.0\n"), "model.beta"),
        (format!("{BASE}[experiment]\nkind = \"whitenoise\"\nepsilons = [0.1, -0.05]\n"), "experiment.epsilons[1]"),
    ] {
        match parse_config(&text) {
            Err(GleError::Domain { path: p, .. }) => assert_eq!(p, path),
            other => panic!("{path}: {other:?}"),
        }
    }
}

#[test]
fn defaults_are_filled_per_kind() {
    let cfg = parse_config(BASE).unwrap();
    let wn = cfg.for_kind("whitenoise").unwrap();
    match &wn.experiment {
        Some(ExperimentConfig::Whitenoise { epsilons, .. }) => assert_eq!(epsilons, &vec![0.1, 0.05, 0.025, 0.0125]),
        other => panic!("{other:?}"),
    }
    assert!(cfg.for_kind("no_such_kind").is_err());
    assert!(wn.for_kind("relaxation").is_err());
    assert_ne!(cfg.hash(), wn.hash());
}

fn config_text(lam: &[f64], alpha: &[f64], beta: f64, seed: u64, dt: f64, replicas: usize) -> String {
    let list = |v: &[f64]| v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(", ");
    format!(
        "seed = {seed}\n[model]\nlambda = [{}]\nalpha = [{}]\nbeta = {}\npotential = {{ kind = \"cosine\", amplitude = 0.5 }}\n\
         [numerics]\nscheme = \"ou_splitting\"\ndt = {}\nhorizon = 10.0\nreplicas = {replicas}\nstride = 3\nbasis = [8, 8, 4]\n",
        list(lam),
        list(alpha),
        fmt_f64(beta),
        fmt_f64(dt)
    )
}

fn modes() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..4).prop_flat_map(|m| (prop::collection::vec(0.01..10.0f64, m), prop::collection::vec(0.01..10.0f64, m)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn effective_config_round_trips((lam, alpha) in modes(), beta in 0.1..10.0f64, seed in any::<u64>(),
                                    dt in 1e-4..0.5f64, replicas in 1usize..10_000) {
        let cfg = parse_config(&config_text(&lam, &alpha, beta, seed, dt, replicas)).unwrap();
        let again: RunConfig = parse_config(&cfg.to_toml()).unwrap();
        prop_assert_eq!(&again, &cfg);
        prop_assert_eq!(again.hash(), cfg.hash());
        prop_assert_eq!(again.to_toml(), cfg.to_toml());
    }

    #[test]
    fn csv_cells_round_trip(bits in any::<u64>()) {
        let x = f64::from_bits(bits);
        prop_assume!(x.is_finite());
        let y: f64 = fmt_f64(x).parse().unwrap();
        prop_assert_eq!(y.to_bits(), x.to_bits());
    }

    #[test]
    fn csv_tables_round_trip(rows in prop::collection::vec(prop::collection::vec(-1e300..1e300f64, 3), 1..20)) {
        let header: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let text = write_columns(&header, &rows, "abc", 5);
        let mut lines = text.lines();
        prop_assert_eq!(lines.next().unwrap(), "# config_hash=abc seed=5");
        prop_assert_eq!(lines.next().unwrap(), "a,b,c");
        for (line, row) in lines.zip(&rows) {
            let parsed: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
            prop_assert_eq!(&parsed, row);
        }
    }
}

#[test]
fn tampering_is_detected() {
    let cfg = parse_config(BASE).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut w = ArtifactWriter::new(dir.path(), &cfg).unwrap();
    w.write("data.csv", b"1,2,3\n").unwrap();
    w.write_unlisted("timing.json", b"{}").unwrap();
    let manifest = w.finish().unwrap();
    assert_eq!(manifest.artifacts.len(), 2);
    assert_eq!(verify_artifacts(dir.path()).unwrap(), manifest);

    // unlisted files may change freely
    fs::write(dir.path().join("timing.json"), b"{\"x\": 1}").unwrap();
    assert!(verify_artifacts(dir.path()).is_ok());

    fs::write(dir.path().join("data.csv"), b"1,2,4\n").unwrap();
    assert!(verify_artifacts(dir.path()).is_err());
    fs::write(dir.path().join("data.csv"), b"1,2,3\n").unwrap();
    assert!(verify_artifacts(dir.path()).is_ok());

    let edited = cfg.to_toml().replace("seed = 42", "seed = 43");
    assert_ne!(edited, cfg.to_toml());
    fs::write(dir.path().join(EFFECTIVE_CONFIG), edited).unwrap();
    assert!(verify_artifacts(dir.path()).is_err());
}

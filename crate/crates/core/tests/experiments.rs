use std::fs;
use std::path::Path;

use gle_core::config::{parse_config, RunConfig};
use gle_core::experiments::{
    default_config, run_and_persist, run_commutators, run_experiment, ExperimentReport, KINDS, REPORT_FILE, TIMING_FILE,
};
use gle_core::io::{verify_artifacts, MANIFEST};
use gle_core::GleError;

const COSINE: &str = "[model]\nlambda = [1.0]\nalpha = [1.0]\npotential = { kind = \"cosine\", amplitude = 1.0 }\n";

fn cfg(extra: &str) -> RunConfig {
    parse_config(&format!("{COSINE}{extra}")).unwrap()
}

fn listed_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let manifest = verify_artifacts(dir).unwrap();
    let mut out: Vec<(String, Vec<u8>)> = manifest
        .artifacts
        .iter()
        .map(|a| (a.file.clone(), fs::read(dir.join(&a.file)).unwrap()))
        .collect();
    out.push((MANIFEST.into(), fs::read(dir.join(MANIFEST)).unwrap()));
    out
}

fn assert_reproducible(cfg: &RunConfig, kind: &str) -> ExperimentReport {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let rep = run_and_persist(cfg, kind, a.path()).unwrap();
    run_and_persist(cfg, kind, b.path()).unwrap();
    let (x, y) = (listed_bytes(a.path()), listed_bytes(b.path()));
    assert!(x.iter().any(|(f, _)| f == REPORT_FILE));
    assert!(a.path().join(TIMING_FILE).exists());
    assert!(!x.iter().any(|(f, _)| f == TIMING_FILE));
    assert_eq!(x, y, "{kind} artifacts differ between identical runs");
    rep
}

fn assert_criteria_in_range(rep: &ExperimentReport) {
    assert!(!rep.verdicts.is_empty());
    for v in &rep.verdicts {
        assert!((1..=9).contains(&v.criterion), "{v:?}");
    }
}

#[test]
fn check_is_byte_reproducible_and_passes() {
    let rep = assert_reproducible(&default_config(), "check");
    assert_criteria_in_range(&rep);
    assert!(rep.passed(), "{:?}", rep.failures());
}

#[test]
fn small_whitenoise_run_is_byte_reproducible() {
    let c = cfg("[numerics]\nscheme = \"ou_splitting\"\ndt = 0.05\nhorizon = 1.0\nreplicas = 40\nstride = 1\nbasis = [8, 8, 4]\n\
                 [experiment]\nkind = \"whitenoise\"\nepsilons = [0.1, 0.05, 0.025]\nhorizon = 0.5\n");
    let rep = assert_reproducible(&c, "whitenoise");
    assert_criteria_in_range(&rep);
    assert!(rep.values["rms_order"].is_finite());
}

#[test]
fn whitenoise_needs_three_epsilons() {
    let c = cfg("[experiment]\nkind = \"whitenoise\"\nepsilons = [0.1]\n");
    match run_experiment(&c, "whitenoise") {
        Err(GleError::Precondition(msg)) => assert!(msg.contains("3 epsilon"), "{msg}"),
        other => panic!("{other:?}"),
    }
    let c = cfg("[experiment]\nkind = \"whitenoise\"\nepsilons = [0.1, 0.05, 0.01]\n");
    assert!(run_experiment(&c, "whitenoise").is_err(), "non-geometric grid accepted");
}

#[test]
fn equilibrium_start_gives_a_flat_relaxation() {
    let c = cfg("[experiment]\nkind = \"relaxation\"\ninitial = { kind = \"gibbs\" }\nparticles = 20000\nhorizon = 1.0\nrecord_every = 0.25\n");
    let rep = run_experiment(&c, "relaxation").unwrap();
    let flat = rep.verdicts.iter().find(|v| v.name.contains("flat")).expect("flat verdict");
    assert!(flat.passed, "{flat:?}");
    assert_criteria_in_range(&rep);
}

#[test]
fn commutator_table_is_exact() {
    let rep = run_commutators(&default_config()).unwrap();
    assert_eq!(rep.verdicts.len(), 11);
    assert!(rep.verdicts.iter().all(|v| v.criterion == 4 && v.passed));
}

#[test]
fn simulate_exports_trajectories() {
    let c = cfg("[numerics]\nscheme = \"ou_splitting\"\ndt = 0.05\nhorizon = 2.0\nreplicas = 4\nstride = 2\nbasis = [8, 8, 4]\n");
    let dir = tempfile::tempdir().unwrap();
    let rep = run_and_persist(&c, "simulate", dir.path()).unwrap();
    assert!(rep.passed(), "{:?}", rep.failures());
    let csv = fs::read_to_string(dir.path().join("trajectories.csv")).unwrap();
    assert!(csv.starts_with("# model_fingerprint=") && csv.lines().next().unwrap().contains(&c.for_kind("simulate").unwrap().hash()));
    // 4 replicas, 21 stored states each, plus two header lines
    assert_eq!(csv.lines().count(), 4 * 21 + 2);
}

#[test]
fn homogenization_needs_a_periodic_model() {
    let c = parse_config(
        "[model]\nlambda = [1.0]\nalpha = [1.0]\npotential = { kind = \"quadratic\", stiffness = 1.0 }\ndomain = \"confining\"\n",
    )
    .unwrap();
    assert!(run_experiment(&c.for_kind("homogenization").unwrap(), "homogenization").is_err());
}

#[test]
fn every_kind_is_dispatched() {
    assert!(run_experiment(&default_config(), "bogus").is_err());
    for kind in KINDS {
        if kind != "commutators" {
            default_config().for_kind(kind).unwrap();
        }
    }
}

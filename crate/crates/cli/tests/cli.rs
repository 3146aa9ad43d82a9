use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn gle(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gle"))
        .args(args)
        .current_dir(dir)
        .env_remove("GLE_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn verdict_lines(o: &Output) -> Vec<String> {
    stdout(o)
        .lines()
        .filter(|l| l.starts_with("PASS [criterion") || l.starts_with("FAIL [criterion"))
        .map(String::from)
        .collect()
}

const FREE: &str = "[model]\nlambda = [1.0]\nalpha = [1.0]\n";

#[test]
fn commutators_print_one_line_per_identity() {
    let tmp = tempfile::tempdir().unwrap();
    let o = gle(&["commutators", "--out", "run"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let lines = verdict_lines(&o);
    assert_eq!(lines.len(), 11);
    assert!(lines.iter().all(|l| l.starts_with("PASS [criterion 4]")));
}

#[test]
fn check_passes_and_verifies() {
    let tmp = tempfile::tempdir().unwrap();
    let o = gle(&["check", "--out", "run", "--workers", "1"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(tmp.path().join("run/report.json").exists());

    let v = gle(&["verify", "--out", "run"], tmp.path());
    assert_eq!(v.status.code(), Some(0));
    assert!(stdout(&v).starts_with("verified"));

    let report = tmp.path().join("run/report.json");
    let mut text = fs::read_to_string(&report).unwrap();
    text.push(' ');
    fs::write(&report, text).unwrap();
    let v = gle(&["verify", "--out", "run"], tmp.path());
    assert_eq!(v.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&v.stderr).contains("report.json"));
}

#[test]
fn free_homogenization_exits_zero() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("free.toml"), FREE).unwrap();
    let o = gle(&["homogenize", "--config", "free.toml", "--out", "run"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let lines = verdict_lines(&o);
    assert!(lines.iter().any(|l| l.contains("[criterion 1]")));
    assert!(lines.iter().all(|l| l.starts_with("PASS")));
}

#[test]
fn single_epsilon_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("wn.toml"),
        format!("{FREE}[experiment]\nkind = \"whitenoise\"\nepsilons = [0.1]\n"),
    )
    .unwrap();
    let o = gle(&["whitenoise", "--config", "wn.toml", "--out", "run"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("\"status\":\"error\"") && err.contains("3 epsilon"), "{err}");
}

#[test]
fn config_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    for (name, text, needle) in [
        ("unknown.toml", format!("{FREE}colour = 3\n"), "colour"),
        ("negative.toml", FREE.replace("alpha = [1.0]", "alpha = [-1.0]"), "alpha[0]"),
    ] {
        fs::write(tmp.path().join(name), text).unwrap();
        let o = gle(&["check", "--config", name, "--out", "run"], tmp.path());
        assert_eq!(o.status.code(), Some(2), "{name}");
        assert!(String::from_utf8_lossy(&o.stderr).contains(needle), "{name}");
    }
}

#[test]
fn mismatched_experiment_kind_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("c.toml"), format!("{FREE}[experiment]\nkind = \"check\"\n")).unwrap();
    let o = gle(&["relax", "--config", "c.toml", "--out", "run"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
}

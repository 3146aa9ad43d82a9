//! `gle`: command-line front end for the GLE verification lab.

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use gle_core::config::{parse_config, RunConfig};
use gle_core::experiments::{default_config, run_and_persist};
use gle_core::io::verify_artifacts;
use gle_core::GleError;

#[derive(Parser, Debug)]
#[command(name = "gle", version, about = "Simulation and verification of the quasi-Markovian generalized Langevin equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration; a unit cosine model is used when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, overriding the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for parallel sections.
    #[arg(long, global = true, env = "GLE_WORKERS")]
    workers: Option<usize>,
    /// Cap on integrator steps per experiment leg.
    #[arg(long, global = true)]
    budget_steps: Option<u64>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Generate trajectories and export them.
    Simulate,
    /// Effective diffusion by MSD, Green–Kubo and the Poisson equation.
    Homogenize,
    /// Strong convergence to the white-noise limit.
    Whitenoise,
    /// Relaxation to equilibrium from a displaced start.
    Relax,
    /// Short-time exponents of the semigroup derivative bounds.
    Shorttime,
    /// Spectral effective diffusion.
    Poisson,
    /// Symbolic commutator identities.
    Commutators,
    /// Lyapunov drift condition.
    Lyapunov,
    /// Fast structural invariant suite.
    Check,
    /// Re-hash a finished run directory and report tampering.
    Verify,
}

impl Command {
    fn kind(self) -> Option<&'static str> {
        Some(match self {
            Command::Simulate => "simulate",
            Command::Homogenize => "homogenization",
            Command::Whitenoise => "whitenoise",
            Command::Relax => "relaxation",
            Command::Shorttime => "short_time",
            Command::Poisson => "poisson",
            Command::Commutators => "commutators",
            Command::Lyapunov => "lyapunov",
            Command::Check => "check",
            Command::Verify => return None,
        })
    }
}

fn load(cli: &Cli) -> Result<RunConfig, GleError> {
    let mut cfg = match &cli.config {
        Some(p) => parse_config(&std::fs::read_to_string(p)?)?,
        None => default_config(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output_dir.clone_from(o);
    }
    if let Some(b) = cli.budget_steps {
        cfg.budget.max_total_steps = b;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn fail(e: &GleError) -> ExitCode {
    let doc = serde_json::json!({ "status": "error", "error": e.to_string() });
    eprintln!("{doc}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("worker pool: {e}");
        }
    }
    let Some(kind) = cli.command.kind() else {
        let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
        return match verify_artifacts(&dir) {
            Ok(m) => {
                println!("verified {} artifacts (config {}, seed {})", m.artifacts.len(), m.config_hash, m.seed);
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e),
        };
    };
    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    let dir = cfg.output_dir.clone();
    let report = match run_and_persist(&cfg, kind, &dir) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    for v in &report.verdicts {
        println!(
            "{} [criterion {}] {}: {:.4e} ({})",
            if v.passed { "PASS" } else { "FAIL" },
            v.criterion,
            v.name,
            v.value,
            v.tolerance
        );
    }
    println!("report: {}", dir.join(gle_core::experiments::REPORT_FILE).display());
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        let failures: Vec<_> = report.failures().into_iter().cloned().collect();
        let doc = serde_json::json!({ "status": "fail", "kind": report.kind, "failures": failures });
        println!("{doc}");
        ExitCode::from(1)
    }
}

//! Output formatting and artifact integrity.
//!
//! Every run directory holds a `manifest.json` listing the SHA-256 of each
//! artifact together with the config hash and seed; [`verify_artifacts`]
//! recomputes all of them.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::{parse_config, RunConfig};
use crate::error::{GleError, Result};

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub const EFFECTIVE_CONFIG: &str = "effective_config.toml";
pub const MANIFEST: &str = "manifest.json";

/// Comma-separated columns with a provenance comment line.
pub fn write_columns(header: &[String], rows: &[Vec<f64>], config_hash: &str, seed: u64) -> String {
    let mut out = format!("# config_hash={config_hash} seed={seed}\n{}\n", header.join(","));
    for r in rows {
        let cells: Vec<String> = r.iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub seed: u64,
    pub artifacts: Vec<ArtifactEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes artifacts into one directory and records them in the manifest.
pub struct ArtifactWriter {
    dir: PathBuf,
    manifest: Manifest,
}

impl ArtifactWriter {
    /// Creates `dir` and writes the effective config as the first artifact.
    pub fn new(dir: &Path, cfg: &RunConfig) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let mut w = ArtifactWriter {
            dir: dir.to_path_buf(),
            manifest: Manifest {
                config_hash: cfg.hash(),
                seed: cfg.seed,
                artifacts: Vec::new(),
            },
        };
        w.write(EFFECTIVE_CONFIG, cfg.to_toml().as_bytes())?;
        Ok(w)
    }

    pub fn config_hash(&self) -> &str {
        &self.manifest.config_hash
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        if name.contains('/') || name.contains('\\') || name == MANIFEST {
            return Err(GleError::Io(format!("invalid artifact name {name:?}")));
        }
        let path = self.dir.join(name);
        fs::write(&path, bytes)?;
        self.manifest.artifacts.retain(|a| a.file != name);
        self.manifest.artifacts.push(ArtifactEntry {
            file: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(path)
    }

    /// Writes a file that is deliberately left out of the manifest (timings).
    pub fn write_unlisted(&self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, bytes)?;
        Ok(path)
    }

    pub fn finish(self) -> Result<Manifest> {
        let text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        fs::write(self.dir.join(MANIFEST), text)?;
        Ok(self.manifest)
    }
}

/// Reloads a run directory and checks the config hash and every artifact digest.
pub fn verify_artifacts(dir: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(dir.join(MANIFEST))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| GleError::Io(format!("unreadable manifest: {e}")))?;
    let cfg = parse_config(&fs::read_to_string(dir.join(EFFECTIVE_CONFIG))?)?;
    if cfg.hash() != manifest.config_hash || cfg.seed != manifest.seed {
        return Err(GleError::Io(format!(
            "config hash mismatch: manifest {} (seed {}), effective config {} (seed {})",
            manifest.config_hash,
            manifest.seed,
            cfg.hash(),
            cfg.seed
        )));
    }
    for a in &manifest.artifacts {
        let bytes = fs::read(dir.join(&a.file))?;
        if sha256_hex(&bytes) != a.sha256 {
            return Err(GleError::Io(format!("artifact {} was modified after the run", a.file)));
        }
    }
    Ok(manifest)
}

//! Report document shared by every experiment.

use serde::Serialize;
use std::collections::BTreeMap;

use crate::config::RunConfig;
use crate::error::Result;
use crate::io::{write_columns, ArtifactWriter};
use crate::stats::EstimateWithCI;

pub const REPORT_FILE: &str = "report.json";
pub const TIMING_FILE: &str = "timing.json";

/// One pass/fail decision, tied to a numbered acceptance criterion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub criterion: u8,
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: String,
    pub detail: String,
}

/// Reference value or bound a measured quantity is compared against.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Target {
    pub quantity: String,
    pub value: Option<f64>,
    pub bound: Option<String>,
    /// Plain description of where the reference comes from.
    pub source: String,
}

/// Columnar time series, written as its own CSV artifact.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Series {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Everything a run produced except wall-clock time, which lives in a sidecar so
/// that the report is a pure function of `(config, seed)`.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub kind: String,
    pub model_fingerprint: String,
    pub config_hash: String,
    pub seed: u64,
    pub parameters: serde_json::Value,
    pub estimates: BTreeMap<String, EstimateWithCI>,
    pub values: BTreeMap<String, f64>,
    pub targets: Vec<Target>,
    pub verdicts: Vec<Verdict>,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub series: Vec<Series>,
    /// Raw artifacts such as trajectory exports, written verbatim.
    #[serde(skip)]
    pub attachments: Vec<(String, Vec<u8>)>,
    #[serde(skip)]
    pub wall_clock_seconds: f64,
}

impl ExperimentReport {
    pub fn new(kind: &str, cfg: &RunConfig, model_fingerprint: &str) -> Self {
        let parameters = serde_json::json!({
            "model": cfg.model,
            "numerics": cfg.numerics,
            "budget": cfg.budget,
            "experiment": cfg.experiment,
        });
        ExperimentReport {
            kind: kind.to_string(),
            model_fingerprint: model_fingerprint.to_string(),
            config_hash: cfg.hash(),
            seed: cfg.seed,
            parameters,
            estimates: BTreeMap::new(),
            values: BTreeMap::new(),
            targets: Vec::new(),
            verdicts: Vec::new(),
            notes: Vec::new(),
            series: Vec::new(),
            attachments: Vec::new(),
            wall_clock_seconds: 0.0,
        }
    }

    pub fn estimate(&mut self, key: &str, e: EstimateWithCI) {
        self.estimates.insert(key.to_string(), e);
    }

    pub fn value(&mut self, key: &str, v: f64) {
        self.values.insert(key.to_string(), v);
    }

    pub fn target(&mut self, quantity: &str, value: Option<f64>, bound: Option<&str>, source: &str) {
        self.targets.push(Target {
            quantity: quantity.to_string(),
            value,
            bound: bound.map(str::to_string),
            source: source.to_string(),
        });
    }

    pub fn verdict(&mut self, criterion: u8, name: &str, passed: bool, value: f64, tolerance: &str, detail: String) {
        self.verdicts.push(Verdict {
            criterion,
            name: name.to_string(),
            passed,
            value,
            tolerance: tolerance.to_string(),
            detail,
        });
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn series(&mut self, name: &str, header: &[&str], rows: Vec<Vec<f64>>) {
        self.series.push(Series {
            name: name.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows,
        });
    }

    /// True when there is at least one verdict and every verdict passed.
    pub fn passed(&self) -> bool {
        !self.verdicts.is_empty() && self.verdicts.iter().all(|v| v.passed)
    }

    pub fn failures(&self) -> Vec<&Verdict> {
        self.verdicts.iter().filter(|v| !v.passed).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Writes `report.json`, one CSV per series and the timing sidecar.
    pub fn persist(&self, w: &mut ArtifactWriter) -> Result<()> {
        w.write(REPORT_FILE, self.to_json().as_bytes())?;
        for s in &self.series {
            let text = write_columns(&s.header, &s.rows, &self.config_hash, self.seed);
            w.write(&format!("{}.csv", s.name), text.as_bytes())?;
        }
        for (name, bytes) in &self.attachments {
            w.write(name, bytes)?;
        }
        let timing = serde_json::json!({ "kind": self.kind, "wall_clock_seconds": self.wall_clock_seconds });
        w.write_unlisted(TIMING_FILE, timing.to_string().as_bytes())?;
        Ok(())
    }
}

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use spillover_core::montecarlo::SimConfig;

/// Record of one `simulate` invocation, sufficient to replay it with
/// `simulate --config <manifest>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    /// RFC 3339 start time.
    pub timestamp: String,
    pub configs: Vec<SimConfig>,
    pub outputs: Vec<PathBuf>,
    pub duration_secs: f64,
    pub runs: Vec<RunSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub design: String,
    pub c: Option<f64>,
    pub reps_used: usize,
    pub n_excluded: usize,
    pub warning: Option<String>,
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }
}

/// `results.csv` → `results.manifest.json`.
pub fn default_path(results: &Path) -> PathBuf {
    results.with_extension("manifest.json")
}

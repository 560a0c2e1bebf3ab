use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::config::{Imperfections, ProbeArg, SimulateConfig};
use crate::error::{read_error, write_error, CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsRun {
    pub eta_min: Option<f64>,
    pub eta_max: Option<f64>,
    pub steps: Option<usize>,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringesRun {
    pub eta: f64,
    pub probe: ProbeArg,
    pub phi_steps: usize,
    #[serde(flatten)]
    pub imperfections: Imperfections,
    /// Events per phase and setting when sampling counts.
    pub counts: Option<u64>,
    pub seed: u64,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateRun {
    #[serde(flatten)]
    pub config: SimulateConfig,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRun {
    pub dataset: PathBuf,
    #[serde(flatten)]
    pub imperfections: Imperfections,
    pub include_cc: bool,
    pub joint_normalization: bool,
    pub hist_bin: Option<f64>,
    pub out_dir: PathBuf,
}

/// Resolved inputs of a run, enough to repeat it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", content = "config", rename_all = "lowercase")]
pub enum RunConfig {
    Bounds(BoundsRun),
    Fringes(FringesRun),
    Simulate(SimulateRun),
    Estimate(EstimateRun),
}

impl RunConfig {
    pub fn name(&self) -> &'static str {
        match self {
            RunConfig::Bounds(_) => "bounds",
            RunConfig::Fringes(_) => "fringes",
            RunConfig::Simulate(_) => "simulate",
            RunConfig::Estimate(_) => "estimate",
        }
    }

    pub fn master_seed(&self) -> Option<u64> {
        match self {
            RunConfig::Fringes(f) if f.counts.is_some() => Some(f.seed),
            RunConfig::Simulate(s) => Some(s.config.seed),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    #[serde(flatten)]
    pub run: RunConfig,
    pub master_seed: Option<u64>,
    pub artifact_version: String,
    pub outputs: Vec<PathBuf>,
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
}

pub fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

impl RunManifest {
    pub fn new(run: RunConfig, outputs: Vec<PathBuf>, started_unix_ms: u64) -> Self {
        RunManifest {
            master_seed: run.master_seed(),
            run,
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            outputs,
            started_unix_ms,
            finished_unix_ms: now_ms(),
        }
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::internal(e.to_string()))?;
        std::fs::write(path, text + "\n").map_err(|e| write_error(path, e))
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| read_error(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
    }
}

/// Manifest written next to a single output file.
pub fn sidecar(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

/// Manifest of a command that writes into a directory.
pub fn in_dir(dir: &Path, command: &str) -> PathBuf {
    dir.join(format!("{command}.manifest.json"))
}

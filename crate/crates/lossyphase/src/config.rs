//! `key = value` campaign configuration files.
//!
//! ```text
//! # comment
//! eta_list = 0.2, 0.361, 0.4, 0.547
//! probe = optimal, noon
//! phases = default          # or a list in radians
//! series = 300
//! events = 2000
//! seed = 361
//! ```

use std::collections::HashMap;

use lossyphase_core::bounds::EXPERIMENT_ETAS;
use lossyphase_core::estimator::LikelihoodOptions;
use lossyphase_core::imperfections::ImperfectionParams;
use lossyphase_core::montecarlo::{default_phases, ExperimentConfig};
use lossyphase_core::prep::ProbeKind;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Environment variable consulted for the master seed when neither the
/// command line nor the config file sets one.
pub const SEED_ENV: &str = "LOSSYPHASE_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ProbeArg {
    Optimal,
    Noon,
}

impl From<ProbeArg> for ProbeKind {
    fn from(p: ProbeArg) -> Self {
        match p {
            ProbeArg::Optimal => ProbeKind::Optimal,
            ProbeArg::Noon => ProbeKind::Noon,
        }
    }
}

impl From<ProbeKind> for ProbeArg {
    fn from(p: ProbeKind) -> Self {
        match p {
            ProbeKind::Optimal => ProbeArg::Optimal,
            ProbeKind::Noon => ProbeArg::Noon,
        }
    }
}

/// Imperfection parameters as they appear in configs and manifests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Imperfections {
    pub epsilon: f64,
    pub delta: f64,
    pub lambda_hom: f64,
    pub v_classical: f64,
}

impl Default for Imperfections {
    fn default() -> Self {
        let p = ImperfectionParams::ideal();
        Imperfections {
            epsilon: p.epsilon,
            delta: p.delta,
            lambda_hom: p.lambda_hom,
            v_classical: p.v_classical,
        }
    }
}

impl Imperfections {
    pub fn params(&self) -> ImperfectionParams {
        ImperfectionParams {
            epsilon: self.epsilon,
            delta: self.delta,
            lambda_hom: self.lambda_hom,
            v_classical: self.v_classical,
            ..ImperfectionParams::ideal()
        }
    }
}

/// Fully resolved campaign settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub eta_list: Vec<f64>,
    pub probe: Vec<ProbeArg>,
    pub phases: Vec<f64>,
    pub series: u32,
    pub events: u64,
    pub seed: u64,
    #[serde(flatten)]
    pub imperfections: Imperfections,
    pub poissonize_m: bool,
    pub include_cc: bool,
    pub quarter_fraction: f64,
    pub events_per_setting: bool,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        let e = ExperimentConfig::default();
        SimulateConfig {
            eta_list: EXPERIMENT_ETAS.to_vec(),
            probe: vec![ProbeArg::Optimal],
            phases: default_phases(),
            series: e.series_count,
            events: e.events_per_series,
            seed: 0,
            imperfections: Imperfections::default(),
            poissonize_m: e.poissonize_m,
            include_cc: LikelihoodOptions::default().include_cc,
            quarter_fraction: e.quarter_fraction,
            events_per_setting: e.events_per_setting,
        }
    }
}

impl SimulateConfig {
    pub fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            eta_list: self.eta_list.clone(),
            probes: self.probe.iter().map(|&p| p.into()).collect(),
            phase_list: self.phases.clone(),
            series_count: self.series,
            events_per_series: self.events,
            master_seed: self.seed,
            imperfections: self.imperfections.params(),
            poissonize_m: self.poissonize_m,
            quarter_fraction: self.quarter_fraction,
            events_per_setting: self.events_per_setting,
        }
    }

    pub fn likelihood(&self) -> LikelihoodOptions {
        LikelihoodOptions {
            include_cc: self.include_cc,
            ..LikelihoodOptions::default()
        }
    }
}

/// A parsed config file. `seed` stays optional so the caller can apply
/// command-line and environment precedence.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigFile {
    pub config: SimulateConfig,
    pub seed: Option<u64>,
}

fn at(line: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::input(format!("line {line}: {msg}"))
}

fn list<T>(raw: &str, line: usize, key: &str, parse: impl Fn(&str) -> Option<T>) -> Result<Vec<T>, CliError> {
    let items: Vec<&str> = raw.split([',', ' ', '\t']).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(at(line, format!("{key} needs at least one value")));
    }
    items
        .into_iter()
        .map(|s| parse(s).ok_or_else(|| at(line, format!("invalid value {s:?} for {key}"))))
        .collect()
}

fn scalar<T: std::str::FromStr>(raw: &str, line: usize, key: &str) -> Result<T, CliError> {
    raw.parse()
        .map_err(|_| at(line, format!("invalid value {raw:?} for {key}")))
}

fn boolean(raw: &str, line: usize, key: &str) -> Result<bool, CliError> {
    match raw {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(at(line, format!("invalid value {raw:?} for {key}, expected true or false"))),
    }
}

fn probe(s: &str) -> Option<Vec<ProbeArg>> {
    match s {
        "optimal" => Some(vec![ProbeArg::Optimal]),
        "noon" => Some(vec![ProbeArg::Noon]),
        "both" => Some(vec![ProbeArg::Optimal, ProbeArg::Noon]),
        _ => None,
    }
}

/// Parses a config file; unknown keys, duplicates and values outside their
/// ranges are reported with their line number.
pub fn parse(text: &str) -> Result<ConfigFile, CliError> {
    let mut cfg = SimulateConfig::default();
    let mut seed = None;
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| at(line, format!("expected key = value, found {content:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        if let Some(first) = seen.insert(key.to_string(), line) {
            return Err(at(line, format!("{key} already set on line {first}")));
        }
        match key {
            "eta_list" => cfg.eta_list = list(value, line, key, |s| s.parse().ok())?,
            "probe" => {
                let nested = list(value, line, key, probe)?;
                let mut probes: Vec<ProbeArg> = Vec::new();
                for p in nested.into_iter().flatten() {
                    if !probes.contains(&p) {
                        probes.push(p);
                    }
                }
                cfg.probe = probes;
            }
            "phases" => {
                cfg.phases = if value == "default" {
                    default_phases()
                } else {
                    list(value, line, key, |s| s.parse().ok())?
                }
            }
            "series" => cfg.series = scalar(value, line, key)?,
            "events" => cfg.events = scalar(value, line, key)?,
            "seed" => seed = Some(scalar(value, line, key)?),
            "epsilon" => cfg.imperfections.epsilon = scalar(value, line, key)?,
            "delta" => cfg.imperfections.delta = scalar(value, line, key)?,
            "lambda_hom" => cfg.imperfections.lambda_hom = scalar(value, line, key)?,
            "v_classical" => cfg.imperfections.v_classical = scalar(value, line, key)?,
            "poissonize_m" => cfg.poissonize_m = boolean(value, line, key)?,
            "include_cc" => cfg.include_cc = boolean(value, line, key)?,
            "quarter_fraction" => cfg.quarter_fraction = scalar(value, line, key)?,
            "events_per_setting" => cfg.events_per_setting = boolean(value, line, key)?,
            _ => return Err(at(line, format!("unknown key {key:?}"))),
        }
    }
    let line_of = |k: &str| seen.get(k).copied().unwrap_or(0);
    let check = |ok: bool, key: &str, msg: &str| -> Result<(), CliError> {
        if ok {
            Ok(())
        } else {
            let line = line_of(key);
            Err(if line == 0 {
                CliError::input(format!("{key}: {msg}"))
            } else {
                at(line, format!("{key}: {msg}"))
            })
        }
    };
    check(cfg.eta_list.iter().all(|&e| e > 0.0 && e <= 1.0), "eta_list", "values must lie in (0, 1]")?;
    check(cfg.phases.iter().all(|p| p.is_finite()), "phases", "values must be finite")?;
    check(cfg.series >= 1, "series", "must be at least 1")?;
    check(cfg.events >= 1, "events", "must be at least 1")?;
    let unit = |x: f64| (0.0..=1.0).contains(&x);
    check(unit(cfg.imperfections.epsilon), "epsilon", "must lie in [0, 1]")?;
    check(cfg.imperfections.delta.is_finite(), "delta", "must be finite")?;
    check(unit(cfg.imperfections.lambda_hom), "lambda_hom", "must lie in [0, 1]")?;
    check(unit(cfg.imperfections.v_classical), "v_classical", "must lie in [0, 1]")?;
    check(unit(cfg.quarter_fraction), "quarter_fraction", "must lie in [0, 1]")?;
    Ok(ConfigFile { config: cfg, seed })
}

/// Command line, then config file, then [`SEED_ENV`], then 0.
pub fn resolve_seed(cli: Option<u64>, file: Option<u64>) -> Result<u64, CliError> {
    if let Some(s) = cli.or(file) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::input(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(0),
    }
}

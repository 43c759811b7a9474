//! Experiment configuration files (TOML).
//!
//! Every key is optional; omitted keys take the defaults below.
//!
//! ```toml
//! algorithms = ["fhjpa", "ga", "ihjpa"]
//! mode = "exact"            # or "mc"
//! episodes = 10000          # Monte Carlo only
//! seed = 1
//! output = "results.csv"
//! record_wall_time = false  # write planning wall time into sweep results
//!
//! [sweep]
//! variable = "es"           # es | ed | p | q | k
//! values = [1, 2, 3, 4, 6, 8]
//!
//! [system]
//! bandwidth_hz = 2e6
//! noise_psd = 3.981e-21
//! sic_factor = 1e-5
//! slot_seconds = 5e-3
//! energy_unit_joules = 2.5e-6
//! harvest_units_src = 2
//! harvest_units_dst = 2
//! harvest_prob_src = 0.5
//! harvest_prob_dst = 0.5
//! battery_cap_src = 5
//! battery_cap_dst = 5
//! power_levels = [0.0, 0.5e-3, 1e-3, 2e-3]
//! horizon = 10
//! # discount = 0.9
//! # initial_state = { gain_idx = [1, 1, 1, 1], b_src = 5, b_dst = 5 }
//!
//! [system.channels.sd]     # likewise se, dd, de
//! levels = [1.655e-13, 3.311e-13]
//! transition = [[0.9, 0.1], [0.1, 0.9]]
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;
use seejam::SystemParams;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config field `{path}`: {message}")]
    Parse { path: String, message: String },
    #[error("invalid config: {0}")]
    Validation(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Fhjpa,
    Ga,
    Ihjpa,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Fhjpa, Algorithm::Ga, Algorithm::Ihjpa];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Fhjpa => "fhjpa",
            Algorithm::Ga => "ga",
            Algorithm::Ihjpa => "ihjpa",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fhjpa" => Ok(Algorithm::Fhjpa),
            "ga" => Ok(Algorithm::Ga),
            "ihjpa" => Ok(Algorithm::Ihjpa),
            other => Err(format!("unknown algorithm `{other}` (expected fhjpa, ga or ihjpa)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    Exact,
    #[serde(alias = "monte-carlo")]
    Mc,
}

impl EvalMode {
    pub fn name(self) -> &'static str {
        match self {
            EvalMode::Exact => "exact",
            EvalMode::Mc => "mc",
        }
    }
}

impl FromStr for EvalMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "exact" => Ok(EvalMode::Exact),
            "mc" | "monte-carlo" => Ok(EvalMode::Mc),
            other => Err(format!("unknown evaluation mode `{other}` (expected exact or mc)")),
        }
    }
}

/// Parameter swept across result rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepVariable {
    /// Source harvest amount, energy units.
    Es,
    /// Destination harvest amount, energy units.
    Ed,
    /// Source harvest probability.
    P,
    /// Destination harvest probability.
    Q,
    /// Horizon in slots.
    K,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::Es => "es",
            SweepVariable::Ed => "ed",
            SweepVariable::P => "p",
            SweepVariable::Q => "q",
            SweepVariable::K => "k",
        }
    }

    pub fn default_grid(self) -> Vec<f64> {
        match self {
            SweepVariable::Es | SweepVariable::Ed => vec![1.0, 2.0, 3.0, 4.0, 6.0, 8.0],
            SweepVariable::P | SweepVariable::Q => vec![0.1, 0.3, 0.5, 0.7, 0.9],
            SweepVariable::K => vec![10.0, 20.0, 50.0, 100.0],
        }
    }

    fn is_integral(self) -> bool {
        matches!(self, SweepVariable::Es | SweepVariable::Ed | SweepVariable::K)
    }

    /// `base` with this variable set to `value`.
    pub fn apply(self, base: &SystemParams, value: f64) -> SystemParams {
        let mut p = base.clone();
        match self {
            SweepVariable::Es => p.harvest_units_src = value as usize,
            SweepVariable::Ed => p.harvest_units_dst = value as usize,
            SweepVariable::P => p.harvest_prob_src = value,
            SweepVariable::Q => p.harvest_prob_dst = value,
            SweepVariable::K => p.horizon = value as usize,
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub system: SystemParams,
    pub algorithms: Vec<Algorithm>,
    pub sweep: Sweep,
    pub episodes: usize,
    pub seed: u64,
    pub output: PathBuf,
    pub mode: EvalMode,
    /// Record planning wall time in sweep results. Off by default so exact
    /// sweeps are reproducible byte for byte.
    pub record_wall_time: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            system: SystemParams::default(),
            algorithms: Algorithm::ALL.to_vec(),
            sweep: Sweep {
                variable: SweepVariable::Es,
                values: SweepVariable::Es.default_grid(),
            },
            episodes: 10_000,
            seed: 1,
            output: PathBuf::from("results.csv"),
            mode: EvalMode::Exact,
            record_wall_time: false,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    variable: SweepVariable,
    values: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    system: SystemParams,
    algorithms: Option<Vec<Algorithm>>,
    sweep: Option<RawSweep>,
    episodes: Option<usize>,
    seed: Option<u64>,
    output: Option<PathBuf>,
    mode: Option<EvalMode>,
    record_wall_time: Option<bool>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.system
            .validate()
            .map_err(|e| ConfigError::Validation(e.to_string()))?;
        if self.algorithms.is_empty() {
            return Err(ConfigError::Validation("at least one algorithm is required".into()));
        }
        let mut seen = self.algorithms.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.algorithms.len() {
            return Err(ConfigError::Validation("algorithms must not repeat".into()));
        }
        if self.episodes == 0 {
            return Err(ConfigError::Validation("episodes must be at least 1".into()));
        }
        let Sweep { variable, values } = &self.sweep;
        if values.is_empty() {
            return Err(ConfigError::Validation("sweep grid is empty".into()));
        }
        if values.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) {
            return Err(ConfigError::Validation(
                "sweep values must be strictly increasing".into(),
            ));
        }
        for &v in values {
            let ok = match variable {
                SweepVariable::P | SweepVariable::Q => (0.0..=1.0).contains(&v),
                SweepVariable::K => v >= 1.0,
                _ => v >= 0.0,
            };
            if !ok || !v.is_finite() || (variable.is_integral() && v.fract() != 0.0) {
                return Err(ConfigError::Validation(format!(
                    "sweep value {v} is not admissible for `{}`",
                    variable.name()
                )));
            }
        }
        Ok(())
    }
}

/// Parse and validate a config from TOML text.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let de = toml::Deserializer::parse(text).map_err(|e| ConfigError::Parse {
        path: "<document>".into(),
        message: e.to_string(),
    })?;
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Parse {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    let defaults = ExperimentConfig::default();
    let sweep = match raw.sweep {
        None => defaults.sweep,
        Some(s) => Sweep {
            variable: s.variable,
            values: s.values.unwrap_or_else(|| s.variable.default_grid()),
        },
    };
    let config = ExperimentConfig {
        system: raw.system,
        algorithms: raw.algorithms.unwrap_or(defaults.algorithms),
        sweep,
        episodes: raw.episodes.unwrap_or(defaults.episodes),
        seed: raw.seed.unwrap_or(defaults.seed),
        output: raw.output.unwrap_or(defaults.output),
        mode: raw.mode.unwrap_or(defaults.mode),
        record_wall_time: raw.record_wall_time.unwrap_or(defaults.record_wall_time),
    };
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

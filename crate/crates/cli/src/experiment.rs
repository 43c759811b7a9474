//! Plan -> evaluate -> sweep orchestration, result export and the planner
//! timing report.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Duration;

use rayon::prelude::*;
use seejam::mdp::Mdp;
use seejam::planners::{
    greedy_policy, horizon_to_discount, plan_backward_induction, plan_policy_iteration, PlanStats,
};
use seejam::sim::{exact_evaluate, monte_carlo_evaluate};
use seejam::{Metrics, Policy, SystemParams};
use thiserror::Error;

use crate::config::{Algorithm, ConfigError, EvalMode, ExperimentConfig, SweepVariable};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("at {variable} = {value}: {source}")]
    Point {
        variable: &'static str,
        value: f64,
        source: seejam::Error,
    },
    #[error(transparent)]
    Core(#[from] seejam::Error),
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

/// One (sweep value, algorithm) outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub sweep_value: f64,
    pub algorithm: Algorithm,
    /// Bits/J.
    pub avg_see: f64,
    /// Bits.
    pub total_secure_bits: f64,
    pub backup_count: u64,
    pub plan_seconds: f64,
    pub mode: EvalMode,
}

/// A planned policy with the work it took.
pub struct Planned {
    pub policy: Policy,
    pub stats: PlanStats,
}

/// Plan `algorithm` on `mdp`. Policy iteration uses the configured discount
/// or `1 - 1/K`.
pub fn plan(algorithm: Algorithm, mdp: &Mdp) -> seejam::Result<Planned> {
    let (policy, stats) = match algorithm {
        Algorithm::Fhjpa => {
            let (p, s) = plan_backward_induction(&mdp.kernel, &mdp.rewards, mdp.params.horizon)?;
            (p.into(), s)
        }
        Algorithm::Ga => {
            let (p, s) = greedy_policy(&mdp.rewards);
            (p.into(), s)
        }
        Algorithm::Ihjpa => {
            let (p, s) = plan_policy_iteration(&mdp.kernel, &mdp.rewards, mdp.params.discount()?)?;
            (p.into(), s)
        }
    };
    Ok(Planned { policy, stats })
}

/// Evaluate `policy` over `mdp.params.horizon` slots from the initial state.
pub fn evaluate(
    policy: &Policy,
    mdp: &Mdp,
    mode: EvalMode,
    episodes: usize,
    seed: u64,
) -> seejam::Result<Metrics> {
    match mode {
        EvalMode::Exact => exact_evaluate(
            policy,
            &mdp.kernel,
            &mdp.rewards,
            mdp.params.horizon,
            mdp.initial_index(),
        ),
        EvalMode::Mc => monte_carlo_evaluate(policy, &mdp.params, episodes, seed),
    }
}

fn run_point(config: &ExperimentConfig, value: f64) -> seejam::Result<Vec<ResultRow>> {
    let params = config.sweep.variable.apply(&config.system, value);
    let mdp = Mdp::build(&params)?;
    config
        .algorithms
        .iter()
        .map(|&algorithm| {
            let planned = plan(algorithm, &mdp)?;
            let m = evaluate(&planned.policy, &mdp, config.mode, config.episodes, config.seed)?;
            Ok(ResultRow {
                sweep_value: value,
                algorithm,
                avg_see: m.avg_see,
                total_secure_bits: m.total_secure_bits,
                backup_count: planned.stats.backups,
                plan_seconds: if config.record_wall_time {
                    planned.stats.elapsed.as_secs_f64()
                } else {
                    0.0
                },
                mode: config.mode,
            })
        })
        .collect()
}

/// Run every sweep point and algorithm. Rows come back ordered by sweep value,
/// then by the configured algorithm order, whatever order points finish in.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRow>, ExperimentError> {
    config.validate()?;
    let variable = config.sweep.variable.name();
    let per_point: Vec<Result<Vec<ResultRow>, ExperimentError>> = config
        .sweep
        .values
        .par_iter()
        .map(|&value| {
            run_point(config, value).map_err(|source| ExperimentError::Point {
                variable,
                value,
                source,
            })
        })
        .collect();
    let mut rows = Vec::new();
    for point in per_point {
        rows.extend(point?);
    }
    Ok(rows)
}

pub const RESULTS_HEADER: &str =
    "sweep_value,algorithm,avg_see_bits_per_joule,total_secure_bits,backup_count,plan_seconds,mode";

/// Render rows as comma-separated text with a header line.
pub fn format_results(rows: &[ResultRow]) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.sweep_value,
            r.algorithm,
            r.avg_see,
            r.total_secure_bits,
            r.backup_count,
            r.plan_seconds,
            r.mode.name()
        ));
    }
    out
}

pub fn write_results(rows: &[ResultRow], path: &Path) -> Result<(), ExperimentError> {
    if rows.is_empty() {
        return Err(ExperimentError::Usage("no result rows to write".into()));
    }
    let write_err = |source| ExperimentError::Write {
        path: path.display().to_string(),
        source,
    };
    let mut file = fs::File::create(path).map_err(write_err)?;
    file.write_all(format_results(rows).as_bytes()).map_err(write_err)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingEntry {
    pub horizon: usize,
    pub algorithm: Algorithm,
    pub stats: PlanStats,
}

/// Planning effort per algorithm and horizon. Wall-clock figures depend on
/// the machine; the operation counters do not.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingReport {
    pub entries: Vec<TimingEntry>,
}

impl TimingReport {
    pub fn get(&self, horizon: usize, algorithm: Algorithm) -> Option<&PlanStats> {
        self.entries
            .iter()
            .find(|e| e.horizon == horizon && e.algorithm == algorithm)
            .map(|e| &e.stats)
    }

    fn horizons(&self) -> Vec<usize> {
        let mut ks: Vec<usize> = self.entries.iter().map(|e| e.horizon).collect();
        ks.dedup();
        ks
    }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

impl fmt::Display for TimingReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:>6}  {:<6}  {:>12}  {:>14}  {:>10}  {:>12}",
            "K", "algo", "value_evals", "backups", "iterations", "plan_seconds"
        )?;
        for e in &self.entries {
            writeln!(
                f,
                "{:>6}  {:<6}  {:>12}  {:>14}  {:>10}  {:>12.6}",
                e.horizon,
                e.algorithm.name(),
                e.stats.value_evaluations,
                e.stats.backups,
                e.stats.iterations,
                secs(e.stats.elapsed)
            )?;
        }
        writeln!(f)?;
        let ks = self.horizons();
        for k in &ks {
            if let (Some(fh), Some(ih)) = (self.get(*k, Algorithm::Fhjpa), self.get(*k, Algorithm::Ihjpa)) {
                let ratio = secs(ih.elapsed) / secs(fh.elapsed).max(f64::MIN_POSITIVE);
                writeln!(
                    f,
                    "K={k}: FHJPA planning took {:.1}% {} time than IHJPA (wall clock, hardware-dependent, informational only)",
                    (1.0 - 1.0 / ratio).abs() * 100.0,
                    if ratio >= 1.0 { "less" } else { "more" }
                )?;
            }
        }
        for w in ks.windows(2) {
            if let (Some(a), Some(b)) = (self.get(w[0], Algorithm::Fhjpa), self.get(w[1], Algorithm::Fhjpa)) {
                writeln!(
                    f,
                    "FHJPA backups K={} -> K={}: x{:.3} (horizon ratio x{:.3})",
                    w[0],
                    w[1],
                    b.backups as f64 / a.backups.max(1) as f64,
                    w[1] as f64 / w[0] as f64
                )?;
            }
        }
        Ok(())
    }
}

/// Plan each configured algorithm at every horizon of interest and record the
/// effort. Horizons come from the sweep grid when sweeping `k`, otherwise the
/// system horizon alone.
pub fn compare_timing(config: &ExperimentConfig) -> Result<TimingReport, ExperimentError> {
    config.validate()?;
    if !(config.algorithms.contains(&Algorithm::Fhjpa) && config.algorithms.contains(&Algorithm::Ihjpa)) {
        return Err(ExperimentError::Usage(
            "timing comparison needs both fhjpa and ihjpa".into(),
        ));
    }
    let horizons: Vec<usize> = if config.sweep.variable == SweepVariable::K {
        config.sweep.values.iter().map(|&v| v as usize).collect()
    } else {
        vec![config.system.horizon]
    };
    let mut entries = Vec::new();
    for k in horizons {
        let params = SystemParams {
            horizon: k,
            discount: Some(horizon_to_discount(k).map_err(|source| ExperimentError::Point {
                variable: "k",
                value: k as f64,
                source,
            })?),
            ..config.system.clone()
        };
        let mdp = Mdp::build(&params)?;
        for &algorithm in &config.algorithms {
            let planned = plan(algorithm, &mdp).map_err(|source| ExperimentError::Point {
                variable: "k",
                value: k as f64,
                source,
            })?;
            entries.push(TimingEntry {
                horizon: k,
                algorithm,
                stats: planned.stats,
            });
        }
    }
    Ok(TimingReport { entries })
}

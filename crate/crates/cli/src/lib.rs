//! Experiment driver for the `seejam` planners: configuration loading,
//! sweeps, result export and planner timing.

pub mod config;
pub mod experiment;

pub use config::{Algorithm, EvalMode, ExperimentConfig, Sweep, SweepVariable};
pub use experiment::{run_experiment, write_results, ResultRow, TimingReport};

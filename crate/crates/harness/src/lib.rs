//! Experiment runner, verification driver and problem generator behind the
//! `lstd` command.

pub mod benchmarks;
pub mod config;
pub mod error;
pub mod experiment;
pub mod output;
pub mod verify;

pub use config::{EstimatorEntry, ExperimentConfig, OutputFormat, ProblemSource};
pub use error::{HarnessError, Result};
pub use experiment::{run_experiment, ExperimentOutcome, ResultRow};

//! Command-line front end and experiment harness for `twoway-core`.
//!
//! [`experiment::run_experiment`] runs seeded size sweeps from an
//! [`config::ExperimentConfig`] and writes `trials.csv`, `timings.csv`,
//! `summary.json` and gnuplot material; [`report::render_report`]
//! regenerates the plot material from a summary.

pub mod commands;
pub mod config;
pub mod error;
pub mod experiment;
pub mod report;

pub use config::ExperimentConfig;
pub use error::{CliError, Result};
pub use experiment::{run_experiment, ExperimentOutcome, Summary, TrialRecord};
pub use report::render_report;

//! Experiment harness, configuration and file formats for `rggmod-core`.

pub mod config;
pub mod experiments;
pub mod output;
pub mod rate;

pub use config::ExperimentConfig;
pub use experiments::run_experiment;
pub use output::{Table, TrialRow};

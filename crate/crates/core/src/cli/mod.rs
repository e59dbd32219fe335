//! Batch experiments driven by JSON configs, and the acceptance battery.

pub mod config;
pub mod experiments;
pub mod report;
pub mod suite;

pub use config::{substream, Experiment, ExperimentConfig, GraphSpec, Mode};
pub use experiments::run;
pub use report::ExperimentReport;
pub use suite::{criteria, run_suite, CriterionResult};

//! Configuration, verification experiments and report emission.

pub mod config;
pub mod experiments;
pub mod report;

pub use config::{load_config, load_config_or, parse_config, Experiment, ExperimentConfig, Tolerances};
pub use experiments::{constants_text, fluid_csv, run_experiment, RunError};
pub use report::{emit_report, ReplicationReport, Rule, Verdict};

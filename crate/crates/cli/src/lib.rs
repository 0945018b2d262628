//! Configuration-driven experiments: config validation, command execution,
//! CSV and plot-script output, and the run manifest.

pub mod config;
pub mod plot;
pub mod run;

pub use config::{validate_config, Command, ConfigIssue, RunConfig};
pub use run::{run_experiment, RunOutcome, EXIT_CONFIG, EXIT_IO, EXIT_OK, EXIT_SOLVER};

//! Experiment runner behind the `fracstoch` binary: configuration, the
//! `sample`, `localtime`, `rate`, `sde` and `report` commands, and SVG
//! output.

pub mod commands;
pub mod config;
pub mod error;
pub mod svg;

pub use commands::{cmd_localtime, cmd_rate, cmd_report, cmd_sample, cmd_sde, Check, Outcome};
pub use config::{preset, ExperimentConfig};
pub use error::{CliError, CliResult};

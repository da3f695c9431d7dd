//! Experiment harness around the `reqo` library: JSON configs in,
//! deterministic CSV/JSON artifacts out.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{run, CommandKind};
pub use config::{ExperimentConfig, LoadedConfig};
pub use error::{CliError, CliResult};
pub use output::{CommandOutput, RunContext};

//! Text file formats and the subcommands behind the `oga` binary.
//!
//! Everything here is plain text: scenarios and echoed configs are TOML,
//! traces are comma-separated, metrics are `key: value` lines, and cost
//! matrices are whitespace-separated numbers after a size line.

pub mod commands;
pub mod error;
pub mod matrix;
pub mod report;
pub mod scenario_file;

pub use error::{CliError, ExitCode};

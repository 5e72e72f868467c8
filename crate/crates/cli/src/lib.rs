//! Command-line front end: configuration parsing, command dispatch and
//! output writing.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{CliError, CliResult};
pub use config::{parse_config, ConfigError, RunConfig};

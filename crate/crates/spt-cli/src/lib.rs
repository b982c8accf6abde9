//! Library side of the `spt` command: configuration, presets and the
//! subcommand implementations.

pub mod commands;
pub mod config;
pub mod error;

pub use commands::{Cli, Command};
pub use config::{preset, RunConfig, PRESETS};
pub use error::CliError;

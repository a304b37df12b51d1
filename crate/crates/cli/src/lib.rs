//! Library side of the `qsnn` command-line tool: configuration files and
//! the train, resume, eval, trace and export commands.

pub mod commands;
pub mod config;
pub mod error;

pub use commands::{run, Cli};
pub use config::{RunConfig, TaskKind};
pub use error::CliError;

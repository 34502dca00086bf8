//! Library side of the `noisimrl` command: configuration, persisted
//! artifacts and the subcommands themselves.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod history;

pub use error::{CliError, Result};

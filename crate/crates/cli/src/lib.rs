//! Command-line front end: config handling, output files and the
//! `calibrate`, `validate`, `crossval` and `simulate` commands.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{run, Command};
pub use config::RunConfig;
pub use error::{CliError, Result};

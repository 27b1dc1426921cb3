//! Library side of the `cohtrack` command-line tool.

pub mod commands;
pub mod config;
pub mod error;
pub mod plot;
pub mod verify;

pub use error::CliError;

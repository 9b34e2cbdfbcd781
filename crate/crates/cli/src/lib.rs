//! Batch runner: JSON configs in, CSV traces and JSON reports out.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{run, Command, Outcome};
pub use config::RunConfig;
pub use error::{CliError, Result};

use std::path::PathBuf;

use cascade_core::CascadeError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Parse error with its position in the config file.
    #[error("{path}:{line}:{column}: {message}")]
    Syntax { path: PathBuf, line: usize, column: usize, message: String },

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Cascade(#[from] CascadeError),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// Process exit code: 2 for bad input, 3 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Syntax { .. } | CliError::Config(_) => 2,
            CliError::Cascade(
                CascadeError::InvalidBase(_)
                | CascadeError::InvalidDigit { .. }
                | CascadeError::InvalidParameter(_)
                | CascadeError::InvalidLaw(_)
                | CascadeError::Unsupported(_)
                | CascadeError::DepthTooLarge { .. },
            ) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

use fheat_core::LabError;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    /// A configuration value is missing, malformed or inconsistent.
    #[error("config key '{key}': {message}")]
    Config { key: String, message: String },

    #[error("config syntax: {0}")]
    Syntax(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Lab(#[from] LabError),
}

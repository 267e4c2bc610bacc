//! CLI error taxonomy. Each category maps to a documented process exit code
//! so scripts can tell a bad config from missing data or artifacts.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration: bad JSON, unknown keys, out-of-range values.
    Config(String),
    /// Dataset problems: missing or corrupt files, not enough class samples.
    Data(String),
    /// A subcommand needs artifacts that a prior `search` has not produced.
    Artifacts(String),
    /// I/O and anything else.
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Artifacts(_) => 4,
            CliError::Other(_) => 1,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        CliError::Data(msg.into())
    }

    pub fn artifacts(msg: impl Into<String>) -> Self {
        CliError::Artifacts(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Artifacts(m) => write!(f, "artifact error: {m}"),
            CliError::Other(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

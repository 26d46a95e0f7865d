use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A configuration value is out of range or inconsistent. `field` is the
    /// dotted config key the value came from.
    #[error("invalid configuration `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("{path}: {message} (byte offset {offset})")]
    Idx {
        path: PathBuf,
        offset: u64,
        message: String,
    },

    #[error("{path}:{line}:{column}: {message}")]
    ConfigParse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("partition constraint unsatisfiable: {0}")]
    Partition(String),

    #[error("global model became non-finite after round {round} (aggregator {aggregator})")]
    NonFinite { round: usize, aggregator: String },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// True for errors that stem from the configuration rather than from a run.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::Config { .. } | Error::ConfigParse { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unknown frame `{0}`")]
    UnknownFrame(String),

    #[error("projection undefined for point on the cylinder axis")]
    UndefinedProjection,

    #[error("inverse model is empty")]
    EmptyModel,

    #[error("model error: need {needed} neighbors, database holds {available}")]
    InsufficientNeighbors { needed: usize, available: usize },

    #[error("optimizer error: {0}")]
    Optimizer(String),

    #[error("bootstrap failed: {touches} of {target} touches after {iterations} iterations (skin unreachable?)")]
    BootstrapFailure {
        iterations: usize,
        touches: usize,
        target: usize,
    },

    #[error("invalid config field `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("config parse: {0}")]
    Toml(#[from] toml::de::Error),

    #[error("config serialize: {0}")]
    TomlSer(#[from] toml::ser::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

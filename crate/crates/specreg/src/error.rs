use std::path::PathBuf;

use thiserror::Error;

/// Errors from file handling, the benchmark harness and the CLI.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid flags or flag combinations.
    #[error("usage: {0}")]
    Usage(String),

    /// A CSV cell, header or shape problem, with its location.
    #[error("{path}: {message}")]
    Data { path: String, message: String },

    /// Model and data disagree on the covariate dimension.
    #[error("shape mismatch: model expects d = {model_d} covariates but the data provides {data_d}")]
    Shape { model_d: usize, data_d: usize },

    /// A model file failed validation.
    #[error("invalid model file: {0}")]
    ModelFile(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Core(#[from] specreg_core::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn data(path: impl std::fmt::Display, message: impl Into<String>) -> Self {
        Error::Data {
            path: path.to_string(),
            message: message.into(),
        }
    }

    /// Process exit code: 2 usage, 3 data, 4 numerical failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Usage(_) => 2,
            Error::Core(e) if e.is_numerical() => 4,
            Error::Core(specreg_core::Error::InvalidShape { .. })
            | Error::Core(specreg_core::Error::InvalidConfig(_))
            | Error::Core(specreg_core::Error::InvalidDofLevel(_))
            | Error::Core(specreg_core::Error::UnknownTag(_)) => 2,
            _ => 3,
        }
    }
}

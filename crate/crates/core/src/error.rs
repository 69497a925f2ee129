use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller violated a documented precondition.
    #[error("usage error: {0}")]
    Usage(String),

    /// A file did not match the expected binary layout.
    #[error("format error in {path}: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Distance profile carries no usable information (zero log-ratio sum or zero distances).
    #[error("degenerate distance profile: {0}")]
    DegenerateDistances(String),

    #[error("index corruption: {0}")]
    IndexCorruption(String),

    /// Loss became non-finite during training.
    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Training { epoch: usize, loss: f64 },

    /// A model produced a non-finite intermediate value.
    #[error("prediction failed: {0}")]
    Prediction(String),

    #[error("pipeline error: {0}")]
    Pipeline(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("integration produced a non-finite state at t = {t}")]
    Integration { t: f64 },

    #[error("state diverged at step {step} (t = {t}): |theta| or |omega| exceeded {limit:e}")]
    BlowUp { step: usize, t: f64, limit: f64 },

    #[error("eigensolver failed for state {state}: {reason}")]
    Solver { state: usize, reason: String },

    #[error("solver failed for lambda = {lambda}: {source}")]
    Lambda {
        lambda: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("non-finite value produced by layer {index} ({layer})")]
    NonFinite { index: usize, layer: String },

    #[error("state error: {0}")]
    State(String),

    #[error("unsupported layer for input derivatives: {0}")]
    Capability(String),

    #[error("training diverged at epoch {epoch}: {reason}")]
    Training { epoch: usize, reason: String },

    #[error("degenerate metric: {0}")]
    DegenerateMetric(String),

    #[error("format error in {path} at line {line}: {msg}")]
    Format {
        path: String,
        line: u64,
        msg: String,
    },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what} index {index} out of range (len {len})")]
    OutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    /// The interface is under-resolved on this element (multiple crossings on an
    /// edge, a face with more than two cut edges, too many intersection points).
    #[error("mesh hypothesis violated on element {element}: {reason}")]
    HypothesisViolation { element: usize, reason: String },

    #[error("degenerate geometry on element {element}: {reason}")]
    DegenerateGeometry { element: usize, reason: String },

    #[error("shape function construction failed on element {element}: {reason}")]
    Construction { element: usize, reason: String },

    #[error("interface sampling failed: {0}")]
    Sampling(String),

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error(
        "solver did not converge after {iterations} iterations (relative residual {residual:e})"
    )]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate point cloud: {0}")]
    DegenerateCloud(String),

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}

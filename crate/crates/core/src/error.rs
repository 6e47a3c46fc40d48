use std::path::PathBuf;

use thiserror::Error;

use crate::pipeline::reader::ReaderError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("chunk is empty")]
    EmptyChunk,

    #[error("{what}: expected {expected} entries, got {actual}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("{0} must not be empty")]
    EmptyInput(&'static str),

    #[error("compression ratio {0} outside [0, 1]")]
    InvalidRatio(f64),

    #[error("performance floor {0} outside the valid range [0, 1]")]
    InvalidFloor(f64),

    #[error("invalid knots: {0}")]
    InvalidKnots(String),

    #[error("query {query} outside curve domain [{lo}, {hi}]; extrapolation is not supported")]
    Extrapolation { query: f64, lo: f64, hi: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("metric mismatch: {left} vs {right}")]
    MetricMismatch { left: String, right: String },

    #[error("calibration records do not cover knot ratio {0}")]
    MissingKnot(f64),

    #[error("training diverged at epoch {epoch}, step {step}: loss = {loss}")]
    Diverged { epoch: usize, step: usize, loss: f64 },

    #[error("invalid training config: {0}")]
    InvalidConfig(String),

    #[error("feature-extractor hash mismatch: model has {found}, runtime expects {expected}")]
    HashMismatch { expected: String, found: String },

    #[error("unsupported format version {found} (expected {expected})")]
    Version { expected: u32, found: u32 },

    #[error("degenerate sweep: every floor collapsed to average ratio {0}")]
    DegenerateSweep(f64),

    #[error("invalid synthetic task config: {0}")]
    InvalidTask(String),

    #[error("malformed data in {path}:{line}: {msg}")]
    Malformed {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Reader(#[from] ReaderError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the outside world (reader service, filesystem)
    /// rather than of the data being processed.
    pub fn is_external(&self) -> bool {
        matches!(self, Error::Reader(_) | Error::Io { .. })
    }
}

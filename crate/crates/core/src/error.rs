use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A binary file did not match its declared layout.
    #[error("format error in field `{field}`: {detail}")]
    Format { field: &'static str, detail: String },

    /// A line of a text format could not be parsed.
    #[error("parse error at line {line}: {detail}")]
    Parse { line: usize, detail: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimMismatch { expected: usize, actual: usize },

    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("index {index} out of bounds for {len} rows")]
    OutOfBounds { index: usize, len: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter `{name}`: {detail}")]
    InvalidParam { name: &'static str, detail: String },

    #[error("projected row {row} on the {side} side has near-zero norm")]
    DegenerateProjection { side: &'static str, row: usize },

    #[error("training diverged at epoch {epoch} (loss {loss})")]
    Diverged { epoch: usize, loss: f64 },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(name: &'static str, detail: impl Into<String>) -> Self {
        Error::InvalidParam {
            name,
            detail: detail.into(),
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    /// Plain CCA cannot whiten a covariance block.
    #[error("singular covariance for {modality}: {reason}")]
    SingularCovariance {
        modality: &'static str,
        reason: String,
    },

    #[error("column {column} of {which} has zero variance")]
    DegenerateColumn { which: &'static str, column: usize },

    #[error("malformed IDX header in {path} at byte offset {offset}: {message}")]
    MalformedHeader {
        path: PathBuf,
        offset: u64,
        message: String,
    },

    #[error("inconsistent data: {0}")]
    Inconsistent(String),

    #[error("nothing to plot: {0}")]
    Empty(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("csv parse error at line {line}: {message}")]
    Csv { line: usize, message: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for the expected undersampled-CCA outcome.
    pub fn is_singular_covariance(&self) -> bool {
        matches!(self, Error::SingularCovariance { .. })
    }
}

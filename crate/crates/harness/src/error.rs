use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{path}:{line}: cannot parse '{field}' as a number")]
    Parse {
        path: PathBuf,
        line: usize,
        field: String,
    },

    #[error("row count mismatch: {features} feature rows vs {distributions} distribution rows")]
    RowCountMismatch {
        features: usize,
        distributions: usize,
    },

    #[error("{path}: invalid distribution at row {row}: {reason}")]
    InvalidDistribution {
        path: PathBuf,
        row: usize,
        reason: String,
    },

    #[error("{path}: {message}")]
    Json { path: PathBuf, message: String },

    #[error("invalid experiment spec: {0}")]
    Spec(String),

    #[error(transparent)]
    Core(#[from] bldl_core::Error),
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 for input problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Core(
                bldl_core::Error::SingularSystem { .. } | bldl_core::Error::NonFinite { .. },
            ) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;

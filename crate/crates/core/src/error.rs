use thiserror::Error;

/// Errors shared across the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("negative entry {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("column {col} sums to {sum}, expected 1 within 1e-9")]
    ColumnSumViolation { col: usize, sum: f64 },

    #[error("shape mismatch in {context}: expected {expected}, got {found}")]
    ShapeMismatch {
        context: &'static str,
        expected: String,
        found: String,
    },

    #[error("invalid distribution at column {col}: {reason}")]
    InvalidDistribution { col: usize, reason: String },

    #[error("non-finite value encountered in {context} (iteration {iter})")]
    NonFinite { context: &'static str, iter: usize },

    #[error("singular linear system in {context} (condition estimate {cond:.3e})")]
    SingularSystem { context: &'static str, cond: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid rank {rank}: must satisfy 1 <= rank <= {max}")]
    InvalidRank { rank: usize, max: usize },

    #[error("all differences are zero; signed-rank test undefined")]
    AllZeroDifferences,

    #[error("degenerate rank table: {0}")]
    DegenerateRanks(String),
}

pub type Result<T> = std::result::Result<T, Error>;

//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Errors raised by validation, linear algebra and solver entry points.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max |a_ij - conj(a_ji)| = {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        expected: usize,
        actual: usize,
        context: &'static str,
    },

    #[error("dimension overflow: {0}")]
    DimensionOverflow(String),

    #[error("invalid probability weights: {0}")]
    BadWeights(String),

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameters: {0}")]
    BadParams(String),

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("unsupported size: {0}")]
    UnsupportedSize(String),

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("evaluation budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("no blocklength below the search cap (10^9) satisfies the bound")]
    NoSolutionBelowCap,

    #[error("validation failed: {0}")]
    Validation(String),
}

impl Error {
    /// True for errors caused by malformed inputs rather than resource limits.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::DimensionOverflow(_)
                | Error::UnsupportedSize(_)
                | Error::TooLarge(_)
                | Error::BudgetExceeded(_)
                | Error::NoSolutionBelowCap
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

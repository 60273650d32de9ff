use thiserror::Error;

use crate::datagen::LibsvmError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix must have at least one row and one column, got {rows}x{cols}")]
    EmptyMatrix { rows: usize, cols: usize },

    #[error("matrix data has {actual} entries, expected {expected}")]
    DataLength { expected: usize, actual: usize },

    #[error("non-finite entry {value} at ({row}, {col})")]
    NonFinite { row: usize, col: usize, value: f64 },

    #[error("{op}: dimension mismatch {left:?} vs {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("power iteration did not converge after {iterations} iterations (last estimate {last_estimate})")]
    NotConverged { iterations: usize, last_estimate: f64 },

    #[error("{0} is undefined for the zero matrix")]
    ZeroMatrix(&'static str),

    #[error("matrix is numerically rank deficient at column {column} (|r_kk| = {pivot:e})")]
    RankDeficient { column: usize, pivot: f64 },

    #[error("matrix is not positive definite (pivot {pivot:e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("invalid probability vector: {0}")]
    InvalidProbabilities(String),

    #[error("length sampling is undefined: every row norm product is zero")]
    UndefinedLengthSampling,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Libsvm(#[from] LibsvmError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

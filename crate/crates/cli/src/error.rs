use std::io;

use sketchguard::{Error, LibsvmError};
use thiserror::Error;

/// Failure of a CLI command, grouped by exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Data(String),

    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::InvalidParameter(_) => CliError::Usage(msg),
            Error::EmptyMatrix { .. }
            | Error::DataLength { .. }
            | Error::NonFinite { .. }
            | Error::DimensionMismatch { .. }
            | Error::Libsvm(_)
            | Error::Io(_) => CliError::Data(msg),
            Error::NotConverged { .. }
            | Error::ZeroMatrix(_)
            | Error::RankDeficient { .. }
            | Error::NotPositiveDefinite { .. }
            | Error::NotPowerOfTwo(_)
            | Error::InvalidProbabilities(_)
            | Error::UndefinedLengthSampling => CliError::Numerical(msg),
        }
    }
}

impl From<LibsvmError> for CliError {
    fn from(e: LibsvmError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

use thiserror::Error;

use crate::ingest::IngestError;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or parameter combinations (exit code 2).
    #[error("{0}")]
    Usage(String),
    /// Unreadable or malformed input (exit code 3).
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
        }
    }
}

impl From<IngestError> for CliError {
    fn from(err: IngestError) -> Self {
        CliError::Data(err.to_string())
    }
}

impl From<fastk_core::Error> for CliError {
    fn from(err: fastk_core::Error) -> Self {
        use fastk_core::Error as E;
        match err {
            E::DimensionMismatch { .. } | E::EmptyDataset | E::NonFinite { .. } | E::IdOutOfRange { .. } => {
                CliError::Data(err.to_string())
            }
            _ => CliError::Usage(err.to_string()),
        }
    }
}

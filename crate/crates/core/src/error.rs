use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("empty dataset")]
    EmptyDataset,
    #[error("non-finite coordinate in point {point}")]
    NonFinite { point: usize },
    #[error("center set is empty")]
    EmptyCenters,
    #[error("point id {id} out of range (n = {n})")]
    IdOutOfRange { id: usize, n: usize },
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("sketches are incompatible: {0}")]
    SketchMismatch(&'static str),
    #[error("instance too large for exhaustive search: {subsets} subsets exceeds {limit}")]
    InstanceTooLarge { subsets: u128, limit: u128 },
}

use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    InvalidDims(String),
    #[error("non-finite value at flat index {0}")]
    NonFinite(usize),
    #[error("invalid error bound: {0}")]
    InvalidErrorBound(String),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("level {level} out of range for a dataset with {num_levels} levels")]
    LevelOutOfRange { level: usize, num_levels: usize },
    #[error("malformed container: {0}")]
    Malformed(String),
    #[error("truncated data: {0}")]
    Truncated(String),
    #[error("checksum mismatch: expected {expected}, found {found}")]
    ChecksumMismatch { expected: String, found: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

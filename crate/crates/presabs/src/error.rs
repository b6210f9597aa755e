//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violated a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Jaccard distance is undefined when both vectors are all-zero.
    #[error("Jaccard distance undefined for empty union")]
    EmptyUnion,

    /// A species draw was requested but every cell is already occupied.
    #[error("no cells remaining")]
    NoCellsRemaining,

    /// An iterative procedure degenerated beyond recovery, for example when
    /// every EM restart collapsed or a configuration lost all spread.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A feature vector contains a NaN or infinite entry.
    #[error("invalid feature vector: {0}")]
    InvalidFeature(String),

    /// Two vectors that must share a dimension do not.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// A metric was asked to evaluate an empty dataset.
    #[error("empty dataset")]
    EmptyDataset,

    /// A metric needs more samples than the dataset provides.
    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    /// Invalid configuration, rejected at construction or load time.
    #[error("config error: {0}")]
    ConfigError(String),

    /// A sample violates stream invariants (ordering, label range, dimension).
    #[error("invalid sample {id}: {msg}")]
    InvalidSample { id: u64, msg: String },

    /// The engine's dataset-state estimate failed a consistency check.
    /// Fatal for the run.
    #[error("state corruption: {0}")]
    StateCorruption(String),

    /// Reports being compared do not describe the same stream.
    #[error("comparison error: {0}")]
    ComparisonError(String),

    /// A structured-text file failed to parse.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

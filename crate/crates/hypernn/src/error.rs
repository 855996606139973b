use std::path::PathBuf;

/// Library-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A coordinate vector was rejected at construction.
    #[error("invalid point: {reason}")]
    InvalidPoint { reason: String },

    /// Mixed dimensions between points, datasets, or indexes.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A dataset contained the same id twice.
    #[error("duplicate id {id} in dataset")]
    DuplicateId { id: u64 },

    /// The operation needs at least one data point.
    #[error("empty dataset")]
    EmptyDataset,

    /// K (or another count) exceeds what the dataset can provide.
    #[error("requested {requested} neighbors from {available} points")]
    NotEnoughPoints { requested: usize, available: usize },

    /// A parameter violated its documented range.
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A point lies outside the norm range a shell partition supports.
    #[error("{subject}: norm {norm} exceeds the supported maximum {max_norm}")]
    NormOutOfRange {
        subject: String,
        norm: f64,
        max_norm: f64,
    },

    /// A caller broke an inter-call contract (e.g. band choice with no live band).
    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// An instance generator could not satisfy its feasibility constraints.
    #[error("infeasible construction: {0}")]
    Infeasible(String),

    /// Configuration inconsistency in the evaluation harness.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Text dataset parse failure.
    #[error("parse error at {path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    /// Binary index container failure (bad magic, version, or truncation).
    #[error("invalid index file: {0}")]
    InvalidIndex(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

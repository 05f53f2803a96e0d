//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by parsing, solving and transfer operations.
#[derive(Debug, Error)]
pub enum Error {
    /// A benchmark file could not be parsed. Carries the offending line
    /// number (1-based) or section name.
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    /// The instance graph leaves some required vertex unreachable from the
    /// depot.
    #[error("disconnected graph: vertex {vertex} unreachable from vertex {from}")]
    Disconnected { from: usize, vertex: usize },

    /// Matrix or vector dimensions do not line up.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A single task demand exceeds the vehicle capacity, so no feasible
    /// route partition exists.
    #[error("infeasible: task {task} demand {demand} exceeds capacity {capacity}")]
    TaskExceedsCapacity {
        task: usize,
        demand: f64,
        capacity: f64,
    },

    /// A solution references a task id the instance does not define.
    #[error("unknown task id {0}")]
    UnknownTask(usize),

    /// Meme selection was asked to run against an empty pool.
    #[error("no relevant meme available: the meme pool is empty")]
    EmptyPool,

    /// Numeric input contained NaN or infinity.
    #[error("non-finite input: {0}")]
    NonFinite(String),

    /// The persisted meme pool could not be decoded. Never silently reset.
    #[error("corrupt meme pool at {path}: {message}")]
    CorruptPool { path: String, message: String },

    /// Two statistics sets cover different instance lists and cannot be
    /// compared.
    #[error("mismatched instance lists: {0}")]
    MismatchedInstances(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

//! Error types shared across the library.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },

    #[error("feature row {row} of view {view} has no observed entries")]
    FullyMissingRow { view: usize, row: usize },

    #[error("missing-value injection failed: {0}")]
    Injection(String),

    #[error("objective became non-finite in term `{term}` at iteration {iteration}")]
    NonFiniteObjective { term: &'static str, iteration: usize },

    #[error("dataset has no labels; evaluation requires ground truth")]
    MissingLabels,

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

//! Error type shared across the crate.

use thiserror::Error;

use crate::scalar::ScalarKind;

#[derive(Debug, Error)]
pub enum Error {
    #[error("scalar kind mismatch: {0:?} vs {1:?}")]
    ScalarKindMismatch(ScalarKind, ScalarKind),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("invalid index set: {0}")]
    InvalidIndexSet(String),

    #[error("invalid mode tree: {0}")]
    InvalidTree(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid mix spec: {0}")]
    InvalidMixSpec(String),

    #[error("invalid hybrid tree: {0}")]
    InvalidHybrid(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("memory budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(String),
}

pub type Result<T> = std::result::Result<T, Error>;

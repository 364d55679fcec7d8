use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the workbench.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("no usable rows in {path} ({skipped} malformed)")]
    EmptyDataset { path: PathBuf, skipped: usize },
    #[error("infeasible configuration: {0}")]
    InfeasibleConfig(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("instance is infeasible: {0}")]
    InfeasibleInstance(String),
    #[error("search budget of {budget} exceeded")]
    BudgetExceeded { budget: u64 },
    #[error("local rate undefined for an empty assignment")]
    UndefinedRate,
    #[error("non-finite loss: {0}")]
    NonFiniteLoss(String),
    #[error("unsupported schema version {found} (expected {expected})")]
    Schema { found: u32, expected: u32 },
    #[error("{0}")]
    Usage(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid of {nodes} nodes exceeds the node budget of {budget}")]
    NodeBudget { nodes: usize, budget: usize },

    #[error("vertical grids do not match: {0}")]
    VerticalMismatch(String),

    #[error("line search failed at iteration {iteration}: no Armijo step above {min_step:e} (slope {slope:e})")]
    LineSearch {
        iteration: usize,
        min_step: f64,
        slope: f64,
    },

    #[error("insufficient data for a fit: {usable} usable points, at least 3 required")]
    InsufficientData { usable: usize },

    #[error("minimality audit failed: {0}")]
    Audit(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

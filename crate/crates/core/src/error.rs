use thiserror::Error;

/// Errors raised by state, operator and model construction or application.
#[derive(Debug, Error)]
pub enum QdError {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("operator kind violation: {0}")]
    Kind(String),

    #[error("capacity exceeded: total dimension {requested} > max_dim {max}")]
    Capacity { requested: usize, max: usize },

    #[error("normalization violation: {0}")]
    Normalization(String),

    #[error("density matrix invariant violation: {0}")]
    Density(String),

    #[error("null vector: combination norm {norm} below tolerance")]
    NullVector { norm: f64 },

    #[error("degenerate request: {0}")]
    DegenerateRequest(String),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, QdError>;

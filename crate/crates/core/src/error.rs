use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dense dimension {dim} exceeds the configured cap of {cap} (raise the dense cap to allow it)")]
    DenseCapExceeded { dim: usize, cap: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("state is not normalized (norm = {0})")]
    NotNormalized(f64),

    #[error("ground state has no overlap above 1e-14 with any computational basis configuration")]
    ZeroOverlap,

    #[error("all solutions eliminated")]
    AllEliminated,

    #[error("{routine} did not converge after {iterations} iterations")]
    NoConvergence { routine: &'static str, iterations: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

use thiserror::Error;

pub type Result<T, E = GbmError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum GbmError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate body: {0}")]
    Degenerate(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// Monte Carlo refuses to estimate sets it barely hits.
    #[error("too few Monte Carlo hits: {hits} < {required}")]
    InsufficientHits { hits: u64, required: u64 },

    #[error("no convergence: {0}")]
    Convergence(String),

    #[error("schema violation: {0}")]
    Schema(String),

    #[error("integration failure: {0}")]
    Integration(String),

    #[error("i/o failure: {0}")]
    Io(String),
}

impl GbmError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        GbmError::InvalidParameter(msg.into())
    }
}

pub(crate) fn ensure_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        Err(GbmError::DimensionMismatch { expected, got })
    } else {
        Ok(())
    }
}

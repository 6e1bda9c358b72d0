use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The new Gram-Schmidt direction collapsed (`s_jj` at or below the breakdown threshold).
    #[error("breakdown at step {step}: s_jj = {s_jj:e} with |delta f| = {delta_f_norm:e}")]
    Breakdown {
        step: usize,
        s_jj: f64,
        delta_f_norm: f64,
    },

    /// The residual map cannot be evaluated at the requested point.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error in {file} at line {line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },

    #[error("row count mismatch: {features} feature rows but {labels} labels")]
    RowCountMismatch { features: usize, labels: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

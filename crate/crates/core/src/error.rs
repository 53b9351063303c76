use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: expected {expected}, got {got}")]
    Dimension { op: &'static str, expected: String, got: String },

    #[error("layer {layer}: {msg}")]
    Layer { layer: usize, msg: String },

    #[error("non-finite value at unroll stage {stage}")]
    NonFinite { stage: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("tape was recorded with different parameters")]
    StaleTape,

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("sampler diverged at iteration {iter}: {msg}")]
    Diverged { iter: u64, msg: String },

    #[error("config field `{field}`: {msg}")]
    Config { field: String, msg: String },

    #[error("provenance check failed: {0}")]
    Provenance(String),

    #[error("malformed file {path}: {msg}")]
    Format { path: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dim(op: &'static str, expected: impl ToString, got: impl ToString) -> Self {
        Error::Dimension {
            op,
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            msg: msg.into(),
        }
    }
}

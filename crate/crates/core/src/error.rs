//! Crate-wide error type.

use thiserror::Error;

/// Errors raised by any module in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{context}: {detail}")]
    Shape { context: &'static str, detail: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("stale or mismatched activation cache: {0}")]
    StaleCache(String),

    #[error("matrix is singular or ill-conditioned (cond ~ {cond:.3e})")]
    IllConditioned { cond: f64 },

    #[error("no generalizing head: all raw blend scores are zero")]
    NoGeneralizingHead,

    #[error("degenerate scenario: {0}")]
    DegenerateScenario(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by bad user-supplied configuration rather than
    /// runtime failures. The CLI maps these to a distinct exit code.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::InvalidArgument(_))
    }
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// The loop family only exists for 0 < R < 1: drag must exceed weight.
    #[error("no finite self-supporting loop for R = {r}: the model requires 0 < R < 1")]
    ModelInvalid { r: f64 },

    #[error("x = {x} lies outside the half domain [0, {limit}]")]
    DomainError { x: f64, limit: f64 },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("degenerate polygon: {0}")]
    DegeneratePolygon(String),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("no multistart point satisfies the R bounds")]
    NoValidStart,

    #[error("phase error: {0}")]
    PhaseError(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

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

use thiserror::Error;

/// Errors raised by the simulation, circuit and learning layers.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument is outside its documented range.
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// Input data violates a structural or physical invariant.
    #[error("invalid data: {0}")]
    Data(String),

    /// A numerical routine produced a non-finite value or failed to converge.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("fit did not converge after {iterations} iterations (best residual {residual:.3e})")]
    FitDivergence { iterations: usize, residual: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn arg_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}

pub(crate) fn data_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Data(msg.into()))
}

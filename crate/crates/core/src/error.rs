//! Crate-wide error type.

/// Errors produced by the library.
///
/// The CLI maps these onto exit codes: config errors exit 2, numeric and
/// convergence failures exit 3.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The request is valid but would exceed a hard resource cap.
    #[error("resource limit: {0}")]
    ResourceLimit(String),

    /// An iterative solver failed to reach its tolerance.
    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    /// A non-finite intermediate value or other numeric breakdown.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Invalid configuration (bad field combination, missing parameter).
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

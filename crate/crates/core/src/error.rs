use thiserror::Error;

/// Errors raised by game construction, regularizers, solvers and metrics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid probability vector: {0}")]
    InvalidDistribution(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A boundary-singular quantity (gradient or Hessian of a steep regularizer,
    /// or an importance weight) was requested at a zero-probability action.
    #[error("singular at boundary: {what} has zero probability on action {action}")]
    Singular { what: String, action: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

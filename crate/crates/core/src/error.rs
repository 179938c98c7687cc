use thiserror::Error;

/// Failures raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("field does not belong to this discretization")]
    Mismatch,
    #[error("field has {got} values, discretization has {expected} nodes")]
    Length { expected: usize, got: usize },
    #[error("non-finite field entry")]
    NonFinite,
    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },
    #[error("hypothesis failed: {0}")]
    Hypothesis(String),
}

pub type Result<T> = std::result::Result<T, Error>;

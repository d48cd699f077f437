use thiserror::Error;

/// Errors produced by the numerical routines.
///
/// `InvalidInput` covers malformed arguments (bad weights, NaN, dimension
/// mismatches). `Domain` covers well-formed inputs that fall outside the
/// region where an operation is defined.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no convergence after {iterations} iterations: {what}")]
    NoConvergence { what: String, iterations: usize },
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for errors caused by the caller's parameters being outside an
    /// operation's domain (as opposed to malformed input).
    pub fn is_domain(&self) -> bool {
        matches!(self, Error::Domain(_) | Error::NoConvergence { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

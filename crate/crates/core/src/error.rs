use thiserror::Error;

/// Errors raised by model construction, grid building and the transform engines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A configuration value is missing or out of range. `field` names it.
    #[error("invalid configuration for `{field}`: {message}")]
    Config { field: String, message: String },

    /// An argument lies outside the domain an operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    /// A factorization, quadrature or inversion failed numerically.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The operation was called on an input it does not support.
    #[error("usage error: {0}")]
    Usage(String),
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn domain(message: impl Into<String>) -> Self {
        Error::Domain(message.into())
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Error::Numerical(message.into())
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Error::Usage(message.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use std::path::PathBuf;

use thiserror::Error;

/// Failures raised by the toolkit.
///
/// Inequality violations are not errors: they are reported as failed
/// entries inside the various report types.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-hyperbolic linear part: eigenvalue modulus {modulus} lies within {tol:e} of 1")]
    NonHyperbolic { modulus: f64, tol: f64 },

    #[error("numerical failure in {context}: {detail} (last residual {residual:e})")]
    Numerical {
        context: &'static str,
        detail: String,
        residual: f64,
    },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    /// True for errors caused by the caller's configuration rather than by a
    /// numerical breakdown.
    pub fn is_configuration(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Usage(_) | Error::InvalidInput(_) | Error::NonHyperbolic { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

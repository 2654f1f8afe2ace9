use thiserror::Error;

/// Error type shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical procedure failed; `diagnostics` carries the values that
    /// describe the failure (residual history, extrapolation sequence, ...).
    #[error("numerical error: {message}")]
    Numerical {
        message: String,
        diagnostics: Vec<f64>,
    },

    /// A configured resource limit was exceeded.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// The caller combined inputs that cannot be used together.
    #[error("usage error: {0}")]
    Usage(String),

    /// Configuration problems, all of them at once.
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn numerical(message: impl Into<String>, diagnostics: Vec<f64>) -> Self {
        Error::Numerical {
            message: message.into(),
            diagnostics,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

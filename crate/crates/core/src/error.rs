use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An integral against `e^{-st}` does not converge.
    #[error("divergent integral: {0}")]
    Divergence(String),

    #[error("quadrature failed on [{lower}, {upper}]: estimated error {error:e} above tolerance {tolerance:e}")]
    Quadrature {
        lower: f64,
        upper: f64,
        error: f64,
        tolerance: f64,
    },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    /// A run finished but violated a numerical health check (mass drift, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("input error: {0}")]
    Input(String),
}

impl Error {
    /// Process exit status for a run that stopped on this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Precondition(_) | Error::Config(_) | Error::Unsupported(_) | Error::Input(_) => 2,
            Error::Divergence(_) | Error::Quadrature { .. } | Error::Numerical(_) => 3,
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

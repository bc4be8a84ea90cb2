use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported configuration: {0}")]
    UnsupportedConfiguration(String),

    #[error("integration failure at t = {time}: {reason} (worst trace drift {worst_drift:.3e})")]
    IntegrationFailure {
        time: f64,
        worst_drift: f64,
        reason: String,
    },

    #[error("no steady state within scaled time {max_time}: residual {residual:.3e} > tolerance {tol:.1e}")]
    ConvergenceFailure {
        max_time: f64,
        residual: f64,
        tol: f64,
    },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("undefined result: {0}")]
    UndefinedResult(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn unsupported(msg: impl Into<String>) -> Self {
        Error::UnsupportedConfiguration(msg.into())
    }
}

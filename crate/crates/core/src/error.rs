//! Crate-wide error type.

use thiserror::Error;

/// Errors raised by the numerical, simulation, inference and I/O layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature did not converge after {subdivisions} subdivisions (estimate {value:e}, error {error:e})")]
    NonConvergence {
        value: f64,
        error: f64,
        subdivisions: usize,
    },

    #[error("value {0} is outside the support of the distribution")]
    OutOfSupport(f64),

    #[error("simulation grid needs {required} cells, cap is {cap}")]
    BudgetExceeded { required: usize, cap: usize },

    #[error("exponentiated moment does not exist: {0}")]
    DivergentMoment(String),

    #[error("no joint exceedances above level {0}")]
    DegenerateTail(f64),

    #[error("hessian is singular or not positive definite")]
    SingularHessian,

    #[error("every optimizer start failed")]
    AllStartsFailed,

    #[error("log-likelihood is not finite: {0}")]
    NonFiniteLikelihood(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("site {site_id} has inconsistent coordinates")]
    InconsistentCoordinates { site_id: String },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}

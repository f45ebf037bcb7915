//! Error type shared by every module of the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Cure fraction requested for a shape parameter that is not negative.
    #[error("distribution is not defective (shape a = {shape} >= 0){}", cause_suffix(*.cause))]
    NotDefective { shape: f64, cause: Option<usize> },

    /// A linked parameter overflowed or became NaN.
    #[error("non-finite parameter: linear predictor {linear_predictor} for cause {cause}")]
    NonFiniteParameter { cause: usize, linear_predictor: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    /// Numeric inversion of a survival function failed to reach its target.
    #[error("numeric inversion did not converge (residual {residual:e})")]
    Inversion { residual: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("log-likelihood is not finite at the initial point")]
    BadStart,

    /// No optimizer run converged. Carries the best parameter vector found.
    #[error("optimizer did not converge: best log-likelihood {best_loglik}, gradient norm {gradient_norm:e}")]
    NonConvergence {
        best_params: Vec<f64>,
        best_loglik: f64,
        gradient_norm: f64,
    },

    /// A finite-difference stencil point produced a non-finite value.
    #[error("non-finite function value in Hessian stencil at coordinates ({row}, {col})")]
    Stencil { row: usize, col: usize },

    #[error("data generation error: {0}")]
    Generation(String),

    #[error("simulation aborted: {failures} of {replications} replications failed")]
    AbortedStudy { failures: usize, replications: usize },

    /// A parsed dataset that breaks a dataset invariant.
    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("io error: {0}")]
    Io(String),
}

fn cause_suffix(cause: Option<usize>) -> String {
    match cause {
        Some(j) => format!(" for cause {j}"),
        None => String::new(),
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

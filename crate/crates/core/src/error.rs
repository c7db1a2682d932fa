use thiserror::Error;

/// Errors produced by the solver stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A value lies outside the domain of a function (e.g. `inv_sigmoid(1.0)`).
    #[error("domain error: {0}")]
    Domain(String),

    /// A density left the effective domain `[0, 1]` of the entropy.
    #[error("infeasible density: {0}")]
    Infeasible(String),

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    SolverFailure { iterations: usize, residual: f64 },

    #[error("line search failed after {trials} trials (best step {best_step:.3e}, best objective {best_objective:.6e}, reference {reference:.6e})")]
    LineSearchFailure {
        trials: usize,
        best_step: f64,
        best_objective: f64,
        reference: f64,
    },

    #[error("internal error: {0}")]
    Internal(String),

    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

use thiserror::Error;

/// Errors surfaced by profile parsing, quadrature and the spectral solvers.
#[derive(Debug, Error)]
pub enum EndsError {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("profile is not positive: value {value} at r = {r}")]
    NonPositive { r: f64, value: f64 },

    #[error("argument out of range: {0}")]
    Range(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, EndsError>;

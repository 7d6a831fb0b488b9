use thiserror::Error;

/// Error type shared by all solver and estimator modules.
#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("path not in Cameron-Martin space: {0}")]
    NotInCameronMartin(String),

    #[error("eigensolver failed: {0}")]
    EigenSolve(String),

    #[error("root bracketing failed: {0}")]
    Bracket(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("positivity violated: {0}")]
    Positivity(String),

    #[error("fixed point did not converge: {0}")]
    NonConvergence(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("grid index {index} out of range (grid size {size})")]
    IndexOutOfRange { index: usize, size: usize },

    #[error(
        "dense materialization of {rows}x{cols} complex matrix needs {bytes} bytes, budget is {budget} bytes"
    )]
    BudgetExceeded {
        rows: usize,
        cols: usize,
        bytes: usize,
        budget: usize,
    },

    #[error("power iteration did not converge after {iters} iterations (estimate {estimate:e}, relative change {residual:e})")]
    NoConvergence {
        iters: usize,
        estimate: f64,
        residual: f64,
    },

    #[error("lasso diverged at iteration {iter}: objective rose from {previous:e} to {current:e}")]
    Divergence {
        iter: usize,
        previous: f64,
        current: f64,
    },
}

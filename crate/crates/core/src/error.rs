use thiserror::Error;

/// Errors surfaced by the analytic and simulation layers.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The stationary solve did not reach the residual contract.
    #[error("stationary solve did not converge: L1 residual {residual:.3e} after {iterations} iterations")]
    NonConvergence { residual: f64, iterations: u64 },

    /// The operation is not defined for this parameter combination.
    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    /// Pearson correlation requested for a degenerate (zero-variance) process.
    #[error("correlation undefined: interference variance is zero")]
    UndefinedCorrelation,

    /// Configuration rejected before any computation started.
    #[error("invalid configuration: {}", .0.join("; "))]
    Validation(Vec<String>),
}

pub type Result<T> = std::result::Result<T, Error>;

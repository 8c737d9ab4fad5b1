//! Error taxonomy shared by the numerical modules.

use thiserror::Error;

/// Errors surfaced by the core numerics.
#[derive(Debug, Error)]
pub enum CoreError {
    /// A parameter failed validation against a model assumption
    /// (positivity, ordering, structural sign conditions, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A linear solver failed to reach its tolerance.
    #[error("linear solver `{solver}` stalled: residual {residual:.3e} after {iterations} iterations (target {tolerance:.3e})")]
    LinearSolve {
        solver: &'static str,
        residual: f64,
        iterations: usize,
        tolerance: f64,
    },

    /// A nonlinear iteration (Newton / damped Picard) failed to converge.
    #[error("nonlinear solver `{solver}` did not converge: residual {residual:.3e} after {iterations} iterations")]
    NonlinearSolve {
        solver: &'static str,
        residual: f64,
        iterations: usize,
    },

    /// A discrete field violated a structural property it must satisfy
    /// (boundedness, sign, CFL condition, ...).
    #[error("property violation: {0}")]
    PropertyViolation(String),
}

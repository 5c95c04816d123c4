use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("structural condition violated: {0}")]
    ConditionViolation(String),

    #[error("tree expansion would create {got} vertices, cap is {cap}")]
    SizeOverflow { got: usize, cap: usize },

    #[error("energy {lambda} is {dist:.3e} away from the Dirichlet spectrum (guard {guard:.3e})")]
    DirichletProximity { lambda: f64, dist: f64, guard: f64 },

    #[error("ODE integrator failed: residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    IntegratorFailure { residual: f64, tol: f64 },

    #[error("solver did not converge after {iters} iterations (gap {gap:.3e})")]
    NonConvergence { iters: usize, gap: f64 },

    #[error("Herglotz violation in {context}: Im = {im:.3e} at Im z = {eta:.3e}")]
    HerglotzViolation { context: String, im: f64, eta: f64 },

    #[error("path backtracks at step {step}")]
    BacktrackingPath { step: usize },

    #[error("quadrature did not stabilize: last change {change:.3e}")]
    QuadratureFailure { change: f64 },

    #[error("no sign change in bracket [{lo}, {hi}]")]
    BracketFailure { lo: f64, hi: f64 },

    #[error("pole at vertex {vertex}: |R+ + R-| = {denom:.3e}")]
    Pole { vertex: usize, denom: f64 },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),
}

pub type Result<T> = std::result::Result<T, Error>;

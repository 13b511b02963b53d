use thiserror::Error;

/// Errors shared by all modules. Payloads are stored as `f64` regardless of
/// the scalar the computation ran with.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid material: {0}")]
    InvalidMaterial(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("initial temperature negative: min {min} at node {node}")]
    NegativeTemperature { min: f64, node: usize },

    #[error("initial data violates zero-flux boundary: |slope| = {slope} > {tol} at {endpoint} endpoint of {field}")]
    IncompatibleBoundary {
        field: &'static str,
        endpoint: &'static str,
        slope: f64,
        tol: f64,
    },

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("trajectories sampled at different monitor times")]
    TimeMismatch,

    #[error("non-finite value in field `{field}` at t = {t}")]
    NonFiniteState { field: &'static str, t: f64 },

    #[error("linear solver failed: {0}")]
    SolverFailure(String),

    #[error("explicit step violates stability guard: dt = {dt} > {dt_max}")]
    StabilityViolation { dt: f64, dt_max: f64 },

    #[error("blow-up suspected at t = {t}: monitor = {monitor} (threshold {threshold})")]
    BlowupSuspected {
        monitor: f64,
        threshold: f64,
        t: f64,
    },

    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("degenerate coefficient on [0, {theta_max}]: {what}")]
    DegenerateCoefficient { what: String, theta_max: f64 },

    #[error("fixed-point iteration is not contracting (ratio >= 1 at iterations {first}..={last})")]
    NoContraction { first: usize, last: usize },

    #[error("fixed-point iteration did not converge within {max_iter} iterations (last diff {last_diff})")]
    MaxIterExceeded { max_iter: usize, last_diff: f64 },
}

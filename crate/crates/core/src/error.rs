use thiserror::Error;

use crate::approx::{ApproxReport, CompositionReport};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite state at t = {time} after {steps} steps")]
    NonFiniteState { time: f64, steps: usize },

    #[error("solver exceeded {max_steps} steps")]
    MaxStepsExceeded { max_steps: u64 },

    #[error("no closed-form flow for {0} fields")]
    NoClosedForm(&'static str),

    #[error("affine map is singular (|det| = {det:e})")]
    SingularAffine { det: f64 },

    #[error("grid of {points} points exceeds the limit of {limit}")]
    GridTooLarge { points: u128, limit: u128 },

    #[error(
        "Grönwall bound violated: endpoint error {:e} > bound {:e}",
        .0.endpoint_sup_error,
        .0.gronwall_bound
    )]
    BoundViolated(Box<ApproxReport>),

    #[error("training diverged at epoch {epoch} (loss {loss})")]
    NonFiniteLoss { epoch: usize, loss: f64 },

    #[error(
        "composition missed its budget: sup error {:e} >= eps {:e}",
        .0.final_sup_error,
        .0.eps
    )]
    BudgetMissed(Box<CompositionReport>),

    #[error("x = {0} is outside (0, 1)")]
    DomainError(f64),

    #[error("series tail did not reach {tolerance:e} within {max_terms} terms at x = {x}")]
    TailNotConverged { x: f64, tolerance: f64, max_terms: usize },

    #[error("quadrature on [{a}, {b}] did not converge (estimated error {error:e})")]
    QuadratureNotConverged { a: f64, b: f64, error: f64 },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

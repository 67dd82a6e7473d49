//! Flow endpoints `φ(f, ·, T)` and checks of the flow axioms.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::field::VectorField;
use crate::linalg::distance;
use crate::ode::{integrate, SolverConfig};

fn unit_time() -> f64 {
    1.0
}

/// The time-`terminal_time` map of a field under a fixed integrator
/// configuration. Models always use `terminal_time = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowEndpoint {
    pub field: VectorField,
    pub solver: SolverConfig,
    #[serde(default = "unit_time")]
    pub terminal_time: f64,
}

impl FlowEndpoint {
    pub fn new(field: VectorField) -> Self {
        Self::with_solver(field, SolverConfig::default())
    }

    pub fn with_solver(field: VectorField, solver: SolverConfig) -> Self {
        Self { field, solver, terminal_time: 1.0 }
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        integrate(&self.field, x, self.terminal_time, &self.solver)
    }

    /// Inverse map: the endpoint of the negated field.
    pub fn apply_inverse(&self, y: &[f64]) -> Result<Vec<f64>> {
        integrate(&self.field.negated(), y, self.terminal_time, &self.solver)
    }
}

/// `‖φ(f, x, s+t) − φ(f, φ(f, x, s), t)‖`.
pub fn group_law_residual(field: &VectorField, x: &[f64], s: f64, t: f64, cfg: &SolverConfig) -> Result<f64> {
    let direct = integrate(field, x, s + t, cfg)?;
    let midway = integrate(field, x, s, cfg)?;
    let composed = integrate(field, &midway, t, cfg)?;
    Ok(distance(&direct, &composed))
}

/// `‖φ(f, x, T) − φ(T·f, x, 1)‖`. The rescaled side gets `ceil(|T|)` times
/// the step budget so both sides take steps of the same length in the
/// original time variable.
pub fn rescale_residual(field: &VectorField, x: &[f64], time: f64, cfg: &SolverConfig) -> Result<f64> {
    let direct = integrate(field, x, time, cfg)?;
    let scaled = VectorField::scaled(time, field.clone())?;
    let rescaled = integrate(&scaled, x, 1.0, &cfg.scaled_for(time, 0.0))?;
    Ok(distance(&direct, &rescaled))
}

/// Largest displacement `‖endpoint(x) − x‖` over `points`. For points outside
/// the support of a compactly supported field this is exactly zero.
pub fn support_fixed_check(endpoint: &FlowEndpoint, points: &[Vec<f64>]) -> Result<f64> {
    points.iter().try_fold(0.0f64, |worst, x| {
        let y = endpoint.apply(x)?;
        Ok(worst.max(distance(&y, x)))
    })
}

use serde::{Deserialize, Serialize};

use super::{inflate, reach_box, sup_distance, AxisBox};
use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::ode::{integrate, SolverConfig};

/// Time samples on `[0, 1]` used for the reach set.
pub const REACH_TIME_POINTS: usize = 21;

/// Outcome of comparing the endpoints of `F` and an approximation `f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxReport {
    /// Grid estimate of `sup_{K'} ‖F − f‖`: the larger maximum over grids
    /// on `K'` and on the reach box.
    pub delta: f64,
    #[serde(rename = "lip_F")]
    pub lip_f: f64,
    /// `2·delta·exp(lip_F)`.
    pub gronwall_bound: f64,
    /// Grid estimate of `sup_K ‖φ(F,·,1) − φ(f,·,1)‖`.
    pub endpoint_sup_error: f64,
    pub grid_resolution: usize,
    /// `1e-5 + 1e-3·delta`, allowance for integrator error.
    pub slack: f64,
    pub bound_satisfied: bool,
    /// The bound is proved for `delta < 1`; larger values are reported but
    /// not flagged.
    pub delta_below_one: bool,
    pub k_prime: AxisBox,
}

pub(crate) fn slack_for(delta: f64) -> f64 {
    1e-5 + 1e-3 * delta
}

/// Measures `delta` on `K' = inflate(reach(F, K), 2e^{L_F})` and the endpoint
/// error on `K`, without failing on a violated bound.
pub fn gronwall_report(
    big_f: &VectorField,
    small_f: &VectorField,
    k: &AxisBox,
    resolution: usize,
    cfg: &SolverConfig,
) -> Result<ApproxReport> {
    if big_f.dim() != small_f.dim() {
        return Err(Error::DimensionMismatch { expected: big_f.dim(), actual: small_f.dim() });
    }
    if big_f.dim() != k.dim() {
        return Err(Error::DimensionMismatch { expected: big_f.dim(), actual: k.dim() });
    }
    let lip = big_f.lipschitz_bound();
    let reach = reach_box(big_f, k, resolution, REACH_TIME_POINTS, cfg)?;
    let k_prime = inflate(&reach, 2.0 * lip.exp())?;
    // Both grids lie in K'. The reach-box grid resolves the region the
    // trajectories actually visit when K' is much larger.
    let delta = sup_distance(|x| big_f.eval(x), |x| small_f.eval(x), &k_prime, resolution)?
        .max(sup_distance(|x| big_f.eval(x), |x| small_f.eval(x), &reach, resolution)?);
    let endpoint_sup_error = sup_distance(
        |x| integrate(big_f, x, 1.0, cfg),
        |x| integrate(small_f, x, 1.0, cfg),
        k,
        resolution,
    )?;
    let gronwall_bound = 2.0 * delta * lip.exp();
    let slack = slack_for(delta);
    Ok(ApproxReport {
        delta,
        lip_f: lip,
        gronwall_bound,
        endpoint_sup_error,
        grid_resolution: resolution,
        slack,
        bound_satisfied: endpoint_sup_error <= gronwall_bound + slack,
        delta_below_one: delta < 1.0,
        k_prime,
    })
}

/// As [`gronwall_report`], but a violated bound is an error carrying the
/// report.
pub fn gronwall_verify(
    big_f: &VectorField,
    small_f: &VectorField,
    k: &AxisBox,
    resolution: usize,
    cfg: &SolverConfig,
) -> Result<ApproxReport> {
    let report = gronwall_report(big_f, small_f, k, resolution, cfg)?;
    if report.bound_satisfied {
        Ok(report)
    } else {
        Err(Error::BoundViolated(Box::new(report)))
    }
}

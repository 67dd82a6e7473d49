//! The verification suites. Each returns a CSV table, the checks it
//! asserted, a JSON summary and optionally a chart.

mod compose;
mod fit;
mod flow_axioms;
mod gronwall;
mod normcmp;
mod rescale;

use nodeflow::approx::{inflate, reach_box, AxisBox, REACH_TIME_POINTS};
use nodeflow::{Matrix, SolverConfig, VectorField};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::config::{ExperimentConfig, SuiteParams};
use crate::output::{Chart, Table};

/// One asserted bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub case: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: &str, case: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), case: case.into(), value, threshold, passed: value <= threshold }
    }

    pub fn below(name: &str, case: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), case: case.into(), value, threshold, passed: value < threshold }
    }

    pub fn at_least(name: &str, case: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), case: case.into(), value, threshold, passed: value >= threshold }
    }

    /// A yes/no condition, recorded as value 1 (held) or 0 against
    /// threshold 1.
    pub fn holds(name: &str, case: &str, ok: bool) -> Self {
        Self { name: name.into(), case: case.into(), value: f64::from(u8::from(ok)), threshold: 1.0, passed: ok }
    }
}

#[derive(Debug, Clone)]
pub struct SuiteOutput {
    pub table: Table,
    pub checks: Vec<Check>,
    pub results: Value,
    pub chart: Option<Chart>,
}

impl SuiteOutput {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// A library error together with the inputs of the case that raised it.
#[derive(Debug, thiserror::Error)]
#[error("case {case}: {source}")]
pub struct CaseError {
    pub case: Value,
    #[source]
    pub source: nodeflow::Error,
}

pub(crate) trait CaseContext<T> {
    fn case(self, case: impl FnOnce() -> Value) -> Result<T, CaseError>;
}

impl<T> CaseContext<T> for nodeflow::Result<T> {
    fn case(self, case: impl FnOnce() -> Value) -> Result<T, CaseError> {
        self.map_err(|source| CaseError { case: case(), source })
    }
}

pub fn run_suite(config: &ExperimentConfig) -> Result<SuiteOutput, CaseError> {
    match &config.params {
        SuiteParams::FlowAxioms(p) => flow_axioms::run(config, p),
        SuiteParams::Gronwall(p) => gronwall::run(config, p),
        SuiteParams::Fit(p) => fit::run(config, p),
        SuiteParams::Compose(p) => compose::run(config, p),
        SuiteParams::Rescale(p) => rescale::run(config, p),
        SuiteParams::Normcmp(p) => normcmp::run(config, p),
    }
}

/// Largest value of `f` over `items`, evaluated in parallel.
pub(crate) fn par_max<I, F>(items: &[I], f: F) -> Result<f64, CaseError>
where
    I: Sync,
    F: Fn(&I) -> Result<f64, CaseError> + Sync + Send,
{
    let values = items.par_iter().map(f).collect::<Result<Vec<f64>, CaseError>>()?;
    Ok(values.into_iter().fold(0.0, f64::max))
}

pub(crate) fn uniform_point(rng: &mut ChaCha8Rng, k: &AxisBox) -> Vec<f64> {
    k.lower().iter().zip(k.upper()).map(|(&l, &u)| if u > l { rng.random_range(l..u) } else { l }).collect()
}

pub(crate) fn random_matrix(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Matrix {
    let data = (0..d * d).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
    Matrix::from_row_major(d, d, data).expect("square data")
}

/// Skew-symmetric matrix with unit operator norm.
pub(crate) fn random_skew(rng: &mut ChaCha8Rng, d: usize) -> Matrix {
    if d == 2 {
        return Matrix::unit_skew(2);
    }
    let m = random_matrix(rng, d, 1.0);
    let skew = m.sub(&m.transpose());
    skew.scale(1.0 / skew.op_norm())
}

/// The analytic fields available in dimension `d`: zero, a constant and a
/// linear field with seeded entries, and the compactly supported example
/// (a bump for `d = 1`, a radial rotation on `0.5 ≤ r ≤ 1.5` otherwise).
pub(crate) fn analytic_zoo(d: usize, rng: &mut ChaCha8Rng) -> Vec<(&'static str, VectorField)> {
    let c = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let a = random_matrix(rng, d, 1.0);
    let compact = if d == 1 {
        ("bump1d", VectorField::bump_1d(1.0, 1.0, 1.0))
    } else {
        ("radial_rotation", VectorField::radial_rotation(random_skew(rng, d), 0.5, 1.5))
    };
    vec![
        ("zero", Ok(VectorField::zero(d))),
        ("constant", VectorField::constant(c)),
        ("linear", VectorField::linear(a)),
        compact,
    ]
    .into_iter()
    .map(|(name, f)| (name, f.expect("zoo parameters are valid")))
    .collect()
}

/// `K' = inflate(reach(F, K), 2e^{L_F})`, the region on which an
/// approximation of `F` is compared.
pub(crate) fn k_prime(field: &VectorField, k: &AxisBox, resolution: usize, cfg: &SolverConfig) -> nodeflow::Result<AxisBox> {
    let reach = reach_box(field, k, resolution, REACH_TIME_POINTS, cfg)?;
    inflate(&reach, 2.0 * field.lipschitz_bound().exp())
}

pub(crate) fn to_json<T: Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("report types serialize")
}

use nodeflow::flow::{group_law_residual, support_fixed_check};
use nodeflow::linalg::{distance, norm};
use nodeflow::ode::integrate;
use nodeflow::{Error, FlowEndpoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::{analytic_zoo, par_max, uniform_point, CaseContext, CaseError, Check, SuiteOutput};
use crate::config::{ExperimentConfig, FlowAxiomsParams};
use crate::output::{Cell, Table};

const GROUP_LAW_TOL: f64 = 1e-6;
const INVERSE_TOL: f64 = 1e-6;
const CLOSED_FORM_TOL: f64 = 1e-7;
const NORM_TOL: f64 = 1e-9;
/// Points and times per axis of the closed-form comparison grid.
const ORACLE_GRID: usize = 10;

/// `(x, s, t)` with `s, t, s + t ∈ [−1, 1]`.
fn sample_xst(rng: &mut ChaCha8Rng, k: &nodeflow::approx::AxisBox) -> (Vec<f64>, f64, f64) {
    let x = uniform_point(rng, k);
    loop {
        let s: f64 = rng.random_range(-1.0..=1.0);
        let t: f64 = rng.random_range(-1.0..=1.0);
        if (s + t).abs() <= 1.0 {
            return (x, s, t);
        }
    }
}

/// `ORACLE_GRID` points along a diagonal ray, out to radius 2, crossed with
/// `ORACLE_GRID` times in `[−1.5, 1.5]`.
fn oracle_grid(d: usize) -> Vec<(Vec<f64>, f64)> {
    let dir: Vec<f64> = (0..d).map(|i| 0.5f64.powi(i as i32)).collect();
    let len = norm(&dir);
    let mut out = Vec::with_capacity(ORACLE_GRID * ORACLE_GRID);
    for i in 0..ORACLE_GRID {
        let r = 2.0 * (i + 1) as f64 / ORACLE_GRID as f64;
        let x: Vec<f64> = dir.iter().map(|v| r * v / len).collect();
        for j in 0..ORACLE_GRID {
            out.push((x.clone(), -1.5 + 3.0 * j as f64 / (ORACLE_GRID - 1) as f64));
        }
    }
    out
}

/// Points at distance `(R, R + 5)` from the origin in random directions.
fn exterior_points(rng: &mut ChaCha8Rng, d: usize, radius: f64, count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| {
            let r = radius + rng.random_range(1e-6..5.0);
            let dir: Vec<f64> = loop {
                let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                if norm(&v) > 1e-3 {
                    break v;
                }
            };
            let len = norm(&dir);
            dir.iter().map(|v| r * v / len).collect()
        })
        .collect()
}

pub fn run(config: &ExperimentConfig, p: &FlowAxiomsParams) -> Result<SuiteOutput, CaseError> {
    let d = config.dimension.expect("validated");
    let k = config.domain_or_default();
    let cfg = &config.solver;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let zoo = analytic_zoo(d, &mut rng);

    let mut table = Table::new(vec!["field", "check", "samples", "max_value", "threshold", "pass", "seed"]);
    let mut checks = Vec::new();
    let mut record = |check: Check, samples: usize| {
        table.push(vec![
            Cell::from(check.case.as_str()),
            check.name.as_str().into(),
            samples.into(),
            check.value.into(),
            check.threshold.into(),
            check.passed.into(),
            config.seed.into(),
        ]);
        checks.push(check);
    };

    for (name, field) in &zoo {
        let case = |extra: serde_json::Value| move || json!({ "field": field, "inputs": extra });

        let samples: Vec<_> = (0..p.cases).map(|_| sample_xst(&mut rng, &k)).collect();
        let group = par_max(&samples, |(x, s, t)| {
            group_law_residual(field, x, *s, *t, cfg).case(case(json!({ "x": x, "s": s, "t": t })))
        })?;
        record(Check::at_most("group_law", name, group, GROUP_LAW_TOL), samples.len());

        let endpoint = FlowEndpoint::with_solver(field.clone(), *cfg);
        let inverse = par_max(&samples, |(x, _, _)| {
            let back = endpoint.apply(x).and_then(|y| endpoint.apply_inverse(&y));
            back.map(|b| distance(&b, x)).case(case(json!({ "x": x })))
        })?;
        record(Check::at_most("inverse_roundtrip", name, inverse, INVERSE_TOL), samples.len());

        let grid = oracle_grid(d);
        if !matches!(field.closed_form_flow(&grid[0].0, 0.0), Err(Error::NoClosedForm(_))) {
            let closed = par_max(&grid, |(x, t)| {
                let exact = field.closed_form_flow(x, *t).case(case(json!({ "x": x, "t": t })))?;
                let numeric = integrate(field, x, *t, cfg).case(case(json!({ "x": x, "t": t })))?;
                Ok(distance(&exact, &numeric))
            })?;
            record(Check::at_most("closed_form", name, closed, CLOSED_FORM_TOL), grid.len());
        }

        if *name == "radial_rotation" {
            let drift = par_max(&grid, |(x, t)| {
                let r = norm(x);
                let exact = field.closed_form_flow(x, *t).case(case(json!({ "x": x, "t": t })))?;
                let numeric = integrate(field, x, *t, cfg).case(case(json!({ "x": x, "t": t })))?;
                Ok((norm(&exact) - r).abs().max((norm(&numeric) - r).abs()))
            })?;
            record(Check::at_most("norm_preserved", name, drift, NORM_TOL), grid.len());
        }

        if let (Some(radius), true) = (field.support_radius(), matches!(*name, "bump1d" | "radial_rotation")) {
            let points = exterior_points(&mut rng, d, radius, p.support_points);
            let moved = support_fixed_check(&endpoint, &points).case(case(json!({ "points": points })))?;
            record(Check::at_most("support_fixed", name, moved, 0.0), points.len());
        }
    }

    let results = json!({
        "dimension": d,
        "box": k,
        "fields": zoo.iter().map(|(n, f)| json!({ "name": n, "field": f })).collect::<Vec<_>>(),
        "checks": checks,
    });
    Ok(SuiteOutput { table, checks, results, chart: None })
}

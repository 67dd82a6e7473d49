use nodeflow::flow::rescale_residual;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::{analytic_zoo, par_max, uniform_point, CaseContext, CaseError, Check, SuiteOutput};
use crate::config::{ExperimentConfig, RescaleParams};
use crate::output::{Cell, Table};

const RESCALE_TOL: f64 = 1e-6;

pub fn run(config: &ExperimentConfig, p: &RescaleParams) -> Result<SuiteOutput, CaseError> {
    let d = config.dimension.expect("validated");
    let k = config.domain_or_default();
    let cfg = &config.solver;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let zoo = analytic_zoo(d, &mut rng);

    let mut table = Table::new(vec!["field", "time", "points", "max_residual", "threshold", "pass", "seed"]);
    let mut checks = Vec::new();
    for (name, field) in &zoo {
        let points: Vec<Vec<f64>> = (0..p.points).map(|_| uniform_point(&mut rng, &k)).collect();
        for &time in &p.times {
            let worst = par_max(&points, |x| {
                rescale_residual(field, x, time, cfg).case(|| json!({ "field": field, "x": x, "time": time }))
            })?;
            let check = Check::at_most("rescale", &format!("{name} T={time}"), worst, RESCALE_TOL);
            table.push(vec![
                Cell::from(*name),
                time.into(),
                points.len().into(),
                worst.into(),
                RESCALE_TOL.into(),
                check.passed.into(),
                config.seed.into(),
            ]);
            checks.push(check);
        }
    }
    let results = json!({ "dimension": d, "box": k, "times": p.times, "checks": checks });
    Ok(SuiteOutput { table, checks, results, chart: None })
}

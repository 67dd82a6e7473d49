use nodeflow::approx::{fit_field, gronwall_report, sup_distance, TrainConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::{analytic_zoo, k_prime, to_json, CaseContext, CaseError, Check, SuiteOutput};
use crate::config::{ExperimentConfig, FitParams};
use crate::output::{Cell, Chart, Series, Table};

/// A tanh `[d, 16, d]` network trained for 500 epochs at learning rate
/// `1e-2`.
pub(crate) fn example_train() -> TrainConfig {
    TrainConfig { epoch_count: 500, hidden_widths: vec![16], learning_rate: 1e-2, ..TrainConfig::default() }
}

pub fn run(config: &ExperimentConfig, p: &FitParams) -> Result<SuiteOutput, CaseError> {
    let d = config.dimension.expect("validated");
    let k = config.domain_or_default();
    let cfg = &config.solver;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let zoo = analytic_zoo(d, &mut rng);

    let mut table = Table::new(vec![
        "target",
        "fit_delta",
        "delta",
        "lip_F",
        "gronwall_bound",
        "slack",
        "endpoint_error",
        "pass",
        "seed",
    ]);
    let mut checks = Vec::new();
    let mut cases = Vec::new();
    let mut series = Vec::new();
    for (name, target) in &zoo {
        let inputs = || json!({ "target": target, "box": k });
        let region = k_prime(target, &k, p.gronwall_resolution, cfg).case(inputs)?;
        let tc = config.train_or(example_train(), 0);
        let (fitted, fit) = fit_field(target, &region, &tc).case(|| json!({ "inputs": inputs(), "train": tc }))?;

        let mut ladder = Vec::with_capacity(p.resolutions.len());
        for &n in &p.resolutions {
            let delta = sup_distance(|x| target.eval(x), |x| fitted.eval(x), &region, n)
                .case(|| json!({ "inputs": inputs(), "region": region, "resolution": n }))?;
            ladder.push((n, delta));
        }
        let report = gronwall_report(target, &fitted, &k, p.gronwall_resolution, cfg).case(inputs)?;

        let bound = Check::at_most("gronwall_bound", name, report.endpoint_sup_error, report.gronwall_bound + report.slack);
        table.push(vec![
            Cell::from(*name),
            fit.delta.into(),
            report.delta.into(),
            report.lip_f.into(),
            report.gronwall_bound.into(),
            report.slack.into(),
            report.endpoint_sup_error.into(),
            bound.passed.into(),
            config.seed.into(),
        ]);
        checks.push(bound);
        if matches!(*name, "zero" | "constant") {
            checks.push(Check::at_most("fit_delta", name, fit.delta, p.easy_target_delta));
        }
        series.push(Series { name: name.to_string(), points: ladder.iter().map(|&(n, e)| (n as f64, e)).collect() });
        cases.push(json!({
            "target": name,
            "field": target,
            "train": tc,
            "fit": to_json(&fit),
            "delta_by_resolution": ladder,
            "gronwall": to_json(&report),
        }));
    }
    let chart = Chart {
        title: format!("fit error on K' ({d}D)"),
        x_label: "grid points per axis".into(),
        y_label: "sup |F - f|".into(),
        log_x: true,
        log_y: true,
        series,
    };
    let results = json!({ "dimension": d, "box": k, "cases": cases });
    Ok(SuiteOutput { table, checks, results, chart: Some(chart) })
}

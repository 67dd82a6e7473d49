use nodeflow::approx::{approximate_composition_with, CompositionReport, TrainConfig};
use nodeflow::{AffineMap, Error, Matrix, VectorField};
use serde_json::json;

use super::{to_json, CaseContext, CaseError, Check, SuiteOutput};
use crate::config::{ComposeParams, ExperimentConfig};
use crate::output::{Cell, Table};

/// The planar demo: a radial rotation on `1 ≤ r ≤ 2`, then the shift
/// `(0.5, −0.25)`, followed by `W = diag(2, 1)`.
pub fn demo_stages() -> (Vec<VectorField>, AffineMap) {
    let stages = vec![
        VectorField::radial_rotation(Matrix::unit_skew(2), 1.0, 2.0).expect("valid rotation"),
        VectorField::constant(vec![0.5, -0.25]).expect("finite shift"),
    ];
    let w = AffineMap::new(Matrix::diag(&[2.0, 1.0]), vec![0.0, 0.0]).expect("invertible");
    (stages, w)
}

pub fn run(config: &ExperimentConfig, p: &ComposeParams) -> Result<SuiteOutput, CaseError> {
    let k = config.domain_or_default();
    let (demo, demo_w) = demo_stages();
    let stages = p.stages.clone().unwrap_or(demo);
    let w = p.affine.clone().unwrap_or(demo_w);
    let tc = config.train_or(TrainConfig::default(), 0);
    let inputs = || json!({ "stages": stages, "affine": w, "box": k, "eps": p.eps, "train": tc, "options": p.options });

    let (report, model): (CompositionReport, _) =
        match approximate_composition_with(&stages, &w, &k, p.eps, &tc, &p.options) {
            Ok((model, report)) => (report, Some(model)),
            Err(Error::BudgetMissed(report)) => (*report, None),
            Err(e) => return Err(e).case(inputs),
        };

    let mut table = Table::new(vec![
        "stage",
        "target",
        "budget",
        "fit_delta",
        "stage_error",
        "deviation",
        "endpoint_lipschitz",
        "measured_lipschitz",
        "within_budget",
        "chain_holds",
        "seed",
    ]);
    for s in &report.stages {
        table.push(vec![
            Cell::from(s.index.to_string()),
            s.target_kind.as_str().into(),
            s.budget.into(),
            s.fit.delta.into(),
            s.stage_error.into(),
            s.deviation.into(),
            s.endpoint_lipschitz.into(),
            s.measured_lipschitz.into(),
            s.within_budget.into(),
            s.chain_holds.into(),
            config.seed.into(),
        ]);
    }
    // The summary row reuses the columns: budget is eps, stage_error the
    // final sup error, deviation the telescoping bound and
    // endpoint_lipschitz the operator norm of W.
    table.push(vec![
        "final".into(),
        "composition".into(),
        report.eps.into(),
        Cell::Text(String::new()),
        report.final_sup_error.into(),
        report.telescoping_bound.into(),
        report.w_op_norm.into(),
        Cell::Text(String::new()),
        report.success.into(),
        report.chain_holds.into(),
        config.seed.into(),
    ]);

    let checks = vec![
        Check::below("final_sup_error", "composition", report.final_sup_error, report.eps),
        Check::holds("chain", "composition", report.chain_holds),
    ];
    let results = json!({
        "box": k,
        "train": tc,
        "report": to_json(&report),
        "model": model.as_ref().map(to_json),
    });
    Ok(SuiteOutput { table, checks, results, chart: None })
}

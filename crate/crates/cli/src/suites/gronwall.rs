use nodeflow::approx::{fit_field, gronwall_report, ApproxReport, AxisBox, TrainConfig};
use nodeflow::{Matrix, SolverConfig, VectorField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use super::{k_prime, random_matrix, random_skew, to_json, CaseContext, CaseError, Check, SuiteOutput};
use crate::config::{ExperimentConfig, GronwallParams};
use crate::output::{Cell, Table};

/// Training setup for the MLP side of the trained pairs.
pub(crate) fn quick_train() -> TrainConfig {
    TrainConfig { sample_count: 1024, epoch_count: 150, hidden_widths: vec![16], learning_rate: 1e-2, ..TrainConfig::default() }
}

enum Approximant {
    Analytic(VectorField),
    /// Fit an MLP to `F` on its `K'`, with this seed offset.
    Trained { offset: u64, relu: bool },
}

struct Pair {
    name: String,
    big_f: VectorField,
    small_f: Approximant,
}

fn analytic(name: &str, big_f: &VectorField, small_f: nodeflow::Result<VectorField>) -> Pair {
    Pair { name: name.into(), big_f: big_f.clone(), small_f: Approximant::Analytic(small_f.expect("valid perturbation")) }
}

fn shifted(c: &[f64], u: &[f64], by: f64) -> nodeflow::Result<VectorField> {
    VectorField::constant(c.iter().zip(u).map(|(a, b)| a + by * b).collect())
}

fn linear(m: Matrix) -> VectorField {
    VectorField::linear(m).expect("finite square matrix")
}

/// Perturbation pairs of analytic fields followed by MLP fits of small-`L`
/// targets, all seeded from `rng`.
fn pairs(d: usize, rng: &mut ChaCha8Rng) -> Vec<Pair> {
    let c: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let u: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let a = random_matrix(rng, d, 0.5);
    let a2 = random_matrix(rng, d, 0.3);
    let e = random_matrix(rng, d, 1.0);
    let zero = VectorField::zero(d);
    let cf = VectorField::constant(c.clone()).expect("finite");
    let af = linear(a.clone());
    let a2f = linear(a2.clone());

    let mut out = vec![
        analytic("zero/zero", &zero, Ok(zero.clone())),
        analytic("zero/constant 1e-3", &zero, shifted(&vec![0.0; d], &u, 1e-3)),
        analytic("zero/linear 1e-2", &zero, Ok(linear(e.scale(1e-2)))),
        analytic("constant/shift 1e-2", &cf, shifted(&c, &u, 1e-2)),
        analytic("constant/shift 1e-1", &cf, shifted(&c, &u, 1e-1)),
        analytic("constant/scaled 1.05", &cf, VectorField::scaled(1.05, cf.clone())),
        analytic("linear/perturbed 1e-2", &af, Ok(linear(a.add(&e.scale(1e-2))))),
        analytic("linear/perturbed 1e-3", &af, Ok(linear(a.add(&e.scale(1e-3))))),
        analytic("linear/scaled 1.01", &af, VectorField::scaled(1.01, af.clone())),
        analytic("linear/scaled 0.98", &af, VectorField::scaled(0.98, af.clone())),
        analytic("linear/scaled 1.001", &af, VectorField::scaled(1.001, af.clone())),
        analytic("linear2/perturbed 1e-2", &a2f, Ok(linear(a2.add(&e.scale(1e-2))))),
    ];
    if d == 1 {
        let bump = VectorField::bump_1d(1.0, 1.0, 1.0).expect("valid bump");
        out.extend([
            analytic("bump/amplitude 1.02", &bump, VectorField::bump_1d(1.0, 1.0, 1.02)),
            analytic("bump/center 1.01", &bump, VectorField::bump_1d(1.01, 1.0, 1.0)),
            analytic("bump/width 1.02", &bump, VectorField::bump_1d(1.0, 1.02, 1.0)),
            analytic("bump/scaled 0.99", &bump, VectorField::scaled(0.99, bump.clone())),
            analytic("bump/scaled 1.001", &bump, VectorField::scaled(1.001, bump.clone())),
        ]);
    } else {
        let s = random_skew(rng, d);
        let rot = VectorField::radial_rotation(s.clone(), 0.5, 1.5).expect("valid rotation");
        out.extend([
            analytic("rotation/scaled 1.01", &rot, VectorField::scaled(1.01, rot.clone())),
            analytic("rotation/scaled 0.99", &rot, VectorField::scaled(0.99, rot.clone())),
            analytic("rotation/inner 0.52", &rot, VectorField::radial_rotation(s.clone(), 0.52, 1.5)),
            analytic("rotation/outer 1.48", &rot, VectorField::radial_rotation(s.clone(), 0.5, 1.48)),
            analytic("rotation/scaled 1.001", &rot, VectorField::scaled(1.001, rot.clone())),
        ]);
    }

    let small_compact = if d == 1 {
        VectorField::bump_1d(1.0, 1.0, 0.3).expect("valid bump")
    } else {
        VectorField::radial_rotation(random_skew(rng, d).scale(0.2), 0.5, 1.5).expect("valid rotation")
    };
    let trained = [
        ("zero/mlp", zero, false),
        ("constant/mlp", cf, false),
        ("linear small/mlp", linear(random_matrix(rng, d, 0.3)), false),
        ("linear2/mlp relu", a2f, true),
        ("compact small/mlp", small_compact, false),
    ];
    out.extend(trained.into_iter().enumerate().map(|(i, (name, big_f, relu))| Pair {
        name: name.into(),
        big_f,
        small_f: Approximant::Trained { offset: i as u64, relu },
    }));
    out
}

struct Outcome {
    report: ApproxReport,
    small_f: VectorField,
    fit_delta: Option<f64>,
}

fn evaluate(pair: &Pair, k: &AxisBox, res: usize, cfg: &SolverConfig, config: &ExperimentConfig) -> Result<Outcome, CaseError> {
    let inputs = || json!({ "pair": pair.name, "F": pair.big_f, "box": k, "resolution": res });
    let (small_f, fit_delta) = match &pair.small_f {
        Approximant::Analytic(f) => (f.clone(), None),
        Approximant::Trained { offset, relu } => {
            let region = k_prime(&pair.big_f, k, res, cfg).case(inputs)?;
            let mut tc = config.train_or(quick_train(), *offset);
            if *relu {
                tc.activation = nodeflow::Activation::Relu;
            }
            let (f, fit) = fit_field(&pair.big_f, &region, &tc).case(|| json!({ "inputs": inputs(), "train": tc }))?;
            (f, Some(fit.delta))
        }
    };
    let report =
        gronwall_report(&pair.big_f, &small_f, k, res, cfg).case(|| json!({ "inputs": inputs(), "f": small_f }))?;
    Ok(Outcome { report, small_f, fit_delta })
}

pub fn run(config: &ExperimentConfig, p: &GronwallParams) -> Result<SuiteOutput, CaseError> {
    let d = config.dimension.expect("validated");
    let k = config.domain_or_default();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let pairs = pairs(d, &mut rng);
    let outcomes: Vec<Outcome> = pairs
        .par_iter()
        .map(|pair| evaluate(pair, &k, p.resolution, &config.solver, config))
        .collect::<Result<_, _>>()?;

    let mut table = Table::new(vec![
        "case",
        "kind",
        "big_f",
        "small_f",
        "delta",
        "lip_F",
        "gronwall_bound",
        "slack",
        "endpoint_error",
        "delta_below_one",
        "pass",
        "seed",
    ]);
    let mut checks = Vec::new();
    let mut cases = Vec::new();
    for (pair, out) in pairs.iter().zip(&outcomes) {
        let r = &out.report;
        let kind = if out.fit_delta.is_some() { "trained" } else { "analytic" };
        let check = Check::at_most("gronwall_bound", &pair.name, r.endpoint_sup_error, r.gronwall_bound + r.slack);
        table.push(vec![
            Cell::from(pair.name.as_str()),
            kind.into(),
            pair.big_f.kind_name().into(),
            out.small_f.kind_name().into(),
            r.delta.into(),
            r.lip_f.into(),
            r.gronwall_bound.into(),
            r.slack.into(),
            r.endpoint_sup_error.into(),
            r.delta_below_one.into(),
            check.passed.into(),
            config.seed.into(),
        ]);
        checks.push(check);
        cases.push(json!({
            "case": pair.name,
            "kind": kind,
            "F": pair.big_f,
            "fit_delta": out.fit_delta,
            "report": to_json(r),
        }));
    }
    let violations = checks.iter().filter(|c| !c.passed).count();
    let results = json!({ "dimension": d, "box": k, "pairs": pairs.len(), "violations": violations, "cases": cases });
    Ok(SuiteOutput { table, checks, results, chart: None })
}

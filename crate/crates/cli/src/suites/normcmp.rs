use nodeflow::norm::{divergence_probe, find_gap_witness, h_l1_head, h_norm, halving_ladder, L1_NORM_ON_UNIT_INTERVAL};
use serde_json::json;

use super::{to_json, CaseContext, CaseError, Check, SuiteOutput};
use crate::config::{ExperimentConfig, NormcmpParams};
use crate::output::{Chart, Series, Table};

/// Agreement required between the quadrature and the term-wise `L¹` value.
const L1_TOL: f64 = 5e-3;

pub fn run(config: &ExperimentConfig, p: &NormcmpParams) -> Result<SuiteOutput, CaseError> {
    let quad = &p.quad;
    let ladder = halving_ladder(p.ladder_start, p.ladder_end).case(|| json!({ "params": p }))?;
    let norms = divergence_probe(p.p, &ladder, quad).case(|| json!({ "p": p.p, "deltas": ladder }))?;

    let mut table = Table::new(vec!["p", "delta", "norm", "n", "gap", "seed"]);
    for (&delta, &norm) in ladder.iter().zip(&norms) {
        // g_1 − Id = h, so the gap of the first map equals the norm.
        table.push(vec![p.p.into(), delta.into(), norm.into(), 1usize.into(), norm.into(), config.seed.into()]);
    }
    let increasing = norms.windows(2).all(|w| w[1] > w[0]);
    let ratio = norms[norms.len() - 1] / norms[0];

    let d = p.l1_delta;
    let l1 = h_norm(1.0, d, 1.0 - d, quad).case(|| json!({ "p": 1.0, "a": d, "b": 1.0 - d }))?;
    // Σ_k ((1−δ)^{1/k} − δ^{1/k})/k², integrating the series term by term.
    let termwise = h_l1_head(1.0 - d).and_then(|hi| Ok(hi - h_l1_head(d)?)).case(|| json!({ "delta": d }))?;

    let witness =
        find_gap_witness(p.gap_eps, p.gap_p, quad).case(|| json!({ "eps": p.gap_eps, "p": p.gap_p }))?;

    let checks = vec![
        Check::holds("ladder_increasing", &format!("p={}", p.p), increasing),
        Check::at_most("l1_termwise", &format!("delta={d}"), (l1 - termwise).abs(), L1_TOL),
        Check::below("witness_l1_gap", &format!("n={}", witness.n), witness.l1_gap, p.gap_eps),
        Check::at_least("witness_lp_gap", &format!("n={} delta={}", witness.n, witness.delta), witness.lp_gap, 1.0),
    ];
    let results = json!({
        "ladder": { "p": p.p, "deltas": ladder, "norms": norms, "strictly_increasing": increasing, "last_over_first": ratio },
        "l1_interior": {
            "delta": d,
            "quadrature": l1,
            "termwise": termwise,
            "pi_squared_over_six": L1_NORM_ON_UNIT_INTERVAL,
            "distance_to_pi_squared_over_six": (l1 - L1_NORM_ON_UNIT_INTERVAL).abs(),
        },
        "witness": to_json(&witness),
    });
    let chart = Chart {
        title: format!("divergence of the L^{} norm of h on [δ, 1/2]", p.p),
        x_label: "δ".into(),
        y_label: "norm".into(),
        log_x: true,
        log_y: false,
        series: vec![Series { name: format!("p = {}", p.p), points: ladder.iter().copied().zip(norms.iter().copied()).collect() }],
    };
    Ok(SuiteOutput { table, checks, results, chart: Some(chart) })
}

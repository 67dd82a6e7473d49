//! Approximating `W ∘ g_k ∘ … ∘ g_1` by an [`InnModel`] whose fields are
//! fitted MLPs, stage by stage, with an explicit error budget.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_field, gronwall_report, inflate, reach_box, sampled_lipschitz, ApproxReport, AxisBox, FitReport, TrainConfig, REACH_TIME_POINTS};
use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::flow::FlowEndpoint;
use crate::inn::{AffineMap, InnModel};
use crate::linalg::distance;
use crate::ode::{integrate, SolverConfig};

/// Relative tolerance for the numerical inequality chain, covering rounding
/// and integrator error in the exact endpoints.
const CHAIN_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ComposeOptions {
    /// Points per axis of the measurement grid on `K`.
    pub resolution: usize,
    /// Extra margin around each stage's reach set when fitting.
    pub fit_margin: f64,
    /// Points per axis for the per-stage Grönwall reports.
    pub gronwall_resolution: usize,
    pub solver: SolverConfig,
}

impl Default for ComposeOptions {
    fn default() -> Self {
        Self { resolution: 41, fit_margin: 0.25, gronwall_resolution: 9, solver: SolverConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub index: usize,
    pub target_kind: String,
    /// `K_j`, the compact the stage acts on.
    pub compact: AxisBox,
    pub fit_region: AxisBox,
    /// `eps_j`.
    pub budget: f64,
    /// Certified Lipschitz bound `exp(L_F)` of the exact endpoint `g_j`.
    pub endpoint_lipschitz: f64,
    /// Grid estimate of the Lipschitz constant of `g_j` on `K_j`.
    pub measured_lipschitz: f64,
    pub fit: FitReport,
    /// `e_j`: sup over the model's transported points of `‖ψ_j − g_j‖`.
    pub stage_error: f64,
    /// `D_j`: sup over `K` of the distance between the model's and the exact
    /// intermediate points after this stage.
    pub deviation: f64,
    pub within_budget: bool,
    /// `D_j ≤ endpoint_lipschitz·D_{j−1} + e_j`.
    pub chain_holds: bool,
    pub gronwall: ApproxReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositionReport {
    pub eps: f64,
    pub w_op_norm: f64,
    pub grid_resolution: usize,
    pub stages: Vec<StageReport>,
    /// Grid estimate of `sup_K ‖W∘g_k∘…∘g_1 − model‖`.
    pub final_sup_error: f64,
    /// `‖W‖·Σ_j (Π_{i>j} L_i)·e_j`.
    pub telescoping_bound: f64,
    /// Every stage chain inequality, `final ≤ ‖W‖·D_k` and
    /// `final ≤ telescoping_bound`.
    pub chain_holds: bool,
    pub success: bool,
}

/// Exact time-1 map of a target stage: the closed form where one exists,
/// the integrator otherwise.
fn exact_endpoint(field: &VectorField, x: &[f64], cfg: &SolverConfig) -> Result<Vec<f64>> {
    match field.closed_form_flow(x, 1.0) {
        Err(Error::NoClosedForm(_)) => integrate(field, x, 1.0, cfg),
        other => other,
    }
}

/// [`approximate_composition_with`] under [`ComposeOptions::default`].
pub fn approximate_composition(
    stages: &[VectorField],
    w: &AffineMap,
    k: &AxisBox,
    eps: f64,
    tc: &TrainConfig,
) -> Result<(InnModel, CompositionReport)> {
    approximate_composition_with(stages, w, k, eps, tc, &ComposeOptions::default())
}

/// Fits one MLP field per stage so that `W ∘ ψ_k ∘ … ∘ ψ_1` approximates
/// `W ∘ g_k ∘ … ∘ g_1` on `k`, where `g_j` is the time-1 map of `stages[j]`.
///
/// Stage `j` receives the budget `eps_j = eps / (‖W‖·k·Π_{i>j}(L_i + 1))`
/// with `L_i = exp(lip(F_i))` a certified Lipschitz bound of `g_i`. Errors of
/// earlier stages are transported by later ones at most by these factors, so
/// stage errors within budget keep the final error below `eps`. The compact
/// for stage `j + 1` is the image box of `g_j ∘ … ∘ g_1` on `K`, inflated by
/// the deviation the budget allows after `j + 1` stages.
///
/// Fails with [`Error::BudgetMissed`] when the measured final error is not
/// below `eps`.
pub fn approximate_composition_with(
    stages: &[VectorField],
    w: &AffineMap,
    k: &AxisBox,
    eps: f64,
    tc: &TrainConfig,
    opts: &ComposeOptions,
) -> Result<(InnModel, CompositionReport)> {
    if stages.is_empty() {
        return Err(Error::InvalidParameter("composition needs at least one stage".into()));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let d = w.dim();
    if k.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, actual: k.dim() });
    }
    if let Some(bad) = stages.iter().find(|s| s.dim() != d) {
        return Err(Error::DimensionMismatch { expected: d, actual: bad.dim() });
    }
    tc.validate()?;
    opts.solver.validate()?;

    let n = stages.len();
    let w_norm = w.op_norm();
    let lip: Vec<f64> = stages.iter().map(|s| s.lipschitz_bound().exp()).collect();
    let budgets: Vec<f64> = (0..n)
        .map(|j| eps / (w_norm * n as f64 * lip[j + 1..].iter().map(|l| l + 1.0).product::<f64>()))
        .collect();

    let grid = k.grid(opts.resolution)?;
    let mut compacts = vec![k.clone()];
    let mut points = grid.clone();
    for j in 0..n - 1 {
        points = points.par_iter().map(|x| exact_endpoint(&stages[j], x, &opts.solver)).collect::<Result<_>>()?;
        let image = AxisBox::bounding(points.iter().map(Vec::as_slice))?;
        compacts.push(inflate(&image, (j + 1) as f64 * budgets[j])?);
    }

    let fitted: Vec<(VectorField, FitReport, AxisBox)> = (0..n)
        .into_par_iter()
        .map(|j| {
            let reach = reach_box(&stages[j], &compacts[j], opts.resolution, REACH_TIME_POINTS, &opts.solver)?;
            let region = inflate(&reach, budgets[j] + opts.fit_margin)?;
            let stage_tc = TrainConfig { seed: tc.seed.wrapping_add(j as u64), ..tc.clone() };
            let (field, report) = fit_field(&stages[j], &region, &stage_tc)?;
            Ok((field, report, region))
        })
        .collect::<Result<_>>()?;

    let endpoints: Vec<FlowEndpoint> =
        fitted.iter().map(|(f, _, _)| FlowEndpoint::with_solver(f.clone(), opts.solver)).collect();
    let model = InnModel::new(endpoints, w.clone())?;

    // Per point: stage errors e_j(x), deviations D_j(x), final error.
    let per_point: Vec<(Vec<f64>, Vec<f64>, f64)> = grid
        .par_iter()
        .map(|x| {
            let (mut y, mut z) = (x.clone(), x.clone());
            let mut errs = Vec::with_capacity(n);
            let mut devs = Vec::with_capacity(n);
            for j in 0..n {
                let z_next = model.endpoints()[j].apply(&z)?;
                errs.push(distance(&z_next, &exact_endpoint(&stages[j], &z, &opts.solver)?));
                y = exact_endpoint(&stages[j], &y, &opts.solver)?;
                z = z_next;
                devs.push(distance(&z, &y));
            }
            Ok((errs, devs, distance(&w.apply(&z), &w.apply(&y))))
        })
        .collect::<Result<_>>()?;
    let sup_at = |pick: &dyn Fn(&(Vec<f64>, Vec<f64>, f64)) -> f64| per_point.iter().map(pick).fold(0.0, f64::max);
    let stage_errors: Vec<f64> = (0..n).map(|j| sup_at(&|p| p.0[j])).collect();
    let deviations: Vec<f64> = (0..n).map(|j| sup_at(&|p| p.1[j])).collect();
    let final_sup_error = sup_at(&|p| p.2);

    let slack = |v: f64| CHAIN_TOLERANCE * (1.0 + v);
    let telescoping_bound =
        w_norm * (0..n).map(|j| lip[j + 1..].iter().product::<f64>() * stage_errors[j]).sum::<f64>();
    let mut chain_holds = final_sup_error <= w_norm * deviations[n - 1] + slack(final_sup_error)
        && final_sup_error <= telescoping_bound + slack(final_sup_error);

    let gronwalls: Vec<ApproxReport> = (0..n)
        .into_par_iter()
        .map(|j| gronwall_report(&stages[j], &fitted[j].0, &compacts[j], opts.gronwall_resolution, &opts.solver))
        .collect::<Result<_>>()?;
    let measured: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|j| sampled_lipschitz(|x| exact_endpoint(&stages[j], x, &opts.solver), &compacts[j], opts.resolution))
        .collect::<Result<_>>()?;

    let mut stage_reports = Vec::with_capacity(n);
    for (j, ((_, fit, region), gronwall)) in fitted.into_iter().zip(gronwalls).enumerate() {
        let previous = if j == 0 { 0.0 } else { deviations[j - 1] };
        let stage_chain = deviations[j] <= lip[j] * previous + stage_errors[j] + slack(deviations[j]);
        chain_holds &= stage_chain;
        stage_reports.push(StageReport {
            index: j,
            target_kind: stages[j].kind_name().to_string(),
            compact: compacts[j].clone(),
            fit_region: region,
            budget: budgets[j],
            endpoint_lipschitz: lip[j],
            measured_lipschitz: measured[j],
            fit,
            stage_error: stage_errors[j],
            deviation: deviations[j],
            within_budget: stage_errors[j] <= budgets[j],
            chain_holds: stage_chain,
            gronwall,
        });
    }

    let report = CompositionReport {
        eps,
        w_op_norm: w_norm,
        grid_resolution: opts.resolution,
        stages: stage_reports,
        final_sup_error,
        telescoping_bound,
        chain_holds,
        success: final_sup_error < eps,
    };
    if !report.success {
        return Err(Error::BudgetMissed(Box::new(report)));
    }
    Ok((model, report))
}

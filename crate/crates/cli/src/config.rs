//! Experiment configuration files.
//!
//! A config is one JSON object:
//!
//! ```json
//! {
//!   "kind": "gronwall",
//!   "dimension": 2,
//!   "box": { "lower": [-1, -1], "upper": [1, 1] },
//!   "solver": { "method": "fixed_rk4", "step_count": 256, "rel_tol": 1e-10, "abs_tol": 1e-12, "max_steps": 10000000 },
//!   "train": { "sample_count": 1024, "epoch_count": 150 },
//!   "seed": 42,
//!   "output_prefix": "out/gronwall-2d",
//!   "params": { "resolution": 9 }
//! }
//! ```
//!
//! `kind`, `seed` and `output_prefix` are always required, `dimension` is
//! required by every suite except `normcmp`. Everything else has a per-suite
//! default. Unknown keys are rejected.

use std::fmt;
use std::path::Path;

use nodeflow::approx::{AxisBox, ComposeOptions, TrainConfig};
use nodeflow::norm::QuadConfig;
use nodeflow::{AffineMap, SolverConfig, VectorField};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteKind {
    FlowAxioms,
    Gronwall,
    Fit,
    Compose,
    Rescale,
    Normcmp,
}

impl SuiteKind {
    /// Every suite, in listing order.
    pub const ALL: [SuiteKind; 6] = [
        SuiteKind::FlowAxioms,
        SuiteKind::Gronwall,
        SuiteKind::Fit,
        SuiteKind::Compose,
        SuiteKind::Rescale,
        SuiteKind::Normcmp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SuiteKind::FlowAxioms => "flow_axioms",
            SuiteKind::Gronwall => "gronwall",
            SuiteKind::Fit => "fit",
            SuiteKind::Compose => "compose",
            SuiteKind::Rescale => "rescale",
            SuiteKind::Normcmp => "normcmp",
        }
    }

    fn needs_dimension(self) -> bool {
        self != SuiteKind::Normcmp
    }

    fn default_box(self, d: usize) -> AxisBox {
        let half = match self {
            SuiteKind::FlowAxioms | SuiteKind::Rescale => 2.0,
            SuiteKind::Compose => 1.5,
            _ => 1.0,
        };
        AxisBox::cube(d, -half, half).expect("positive dimension")
    }
}

impl fmt::Display for SuiteKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A rejected config, naming the offending field.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid config field `{field}`: {message}")]
pub struct ConfigInvalid {
    pub field: String,
    pub message: String,
}

fn invalid<T>(field: &str, message: impl Into<String>) -> Result<T, ConfigInvalid> {
    Err(ConfigInvalid { field: field.to_string(), message: message.into() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowAxiomsParams {
    /// Random `(x, s, t)` samples per field.
    pub cases: usize,
    /// Points sampled outside the support of compactly supported fields.
    pub support_points: usize,
}

impl Default for FlowAxiomsParams {
    fn default() -> Self {
        Self { cases: 100, support_points: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GronwallParams {
    /// Points per axis of the grids on `K` and `K'`.
    pub resolution: usize,
}

impl Default for GronwallParams {
    fn default() -> Self {
        Self { resolution: 9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitParams {
    /// Nested resolutions `n, 2n−1, …` at which the fit error is measured.
    pub resolutions: Vec<usize>,
    /// Resolution of the endpoint bound check.
    pub gronwall_resolution: usize,
    /// Fits of `zero` and `constant` targets must reach this error.
    pub easy_target_delta: f64,
}

impl Default for FitParams {
    fn default() -> Self {
        Self { resolutions: vec![5, 9, 17, 33], gronwall_resolution: 9, easy_target_delta: 1e-2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ComposeParams {
    pub eps: f64,
    /// Target stage fields. Defaults to the two-stage planar demo: a radial
    /// rotation on the annulus `1 ≤ r ≤ 2` followed by a constant shift.
    pub stages: Option<Vec<VectorField>>,
    /// Defaults to `diag(2, 1)`.
    pub affine: Option<AffineMap>,
    pub options: ComposeOptions,
}

impl Default for ComposeParams {
    fn default() -> Self {
        Self { eps: 0.1, stages: None, affine: None, options: ComposeOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RescaleParams {
    pub times: Vec<f64>,
    /// Random points per field.
    pub points: usize,
}

impl Default for RescaleParams {
    fn default() -> Self {
        Self { times: vec![-2.0, -0.5, 0.5, 2.0, 10.0], points: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NormcmpParams {
    /// Exponent of the divergence ladder.
    pub p: f64,
    pub ladder_start: f64,
    pub ladder_end: f64,
    /// `δ` of the interior `L¹` norm `‖h‖_{1,[δ,1−δ]}`.
    pub l1_delta: f64,
    /// Target `L¹` gap of the witness search.
    pub gap_eps: f64,
    /// Exponent of the witness search.
    pub gap_p: f64,
    pub quad: QuadConfig,
}

impl Default for NormcmpParams {
    fn default() -> Self {
        Self {
            p: 1.5,
            ladder_start: 1e-2,
            ladder_end: 1e-6,
            l1_delta: 1e-6,
            gap_eps: 0.1,
            gap_p: 1.25,
            quad: QuadConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum SuiteParams {
    FlowAxioms(FlowAxiomsParams),
    Gronwall(GronwallParams),
    Fit(FitParams),
    Compose(ComposeParams),
    Rescale(RescaleParams),
    Normcmp(NormcmpParams),
}

/// A validated experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub kind: SuiteKind,
    /// `None` only for `normcmp`.
    pub dimension: Option<usize>,
    #[serde(rename = "box")]
    pub domain: Option<AxisBox>,
    pub solver: SolverConfig,
    /// `None` selects the suite's default; its seed is replaced by `seed`.
    pub train: Option<TrainConfig>,
    pub seed: u64,
    pub output_prefix: String,
    pub params: SuiteParams,
    pub svg: bool,
}

const KNOWN_KEYS: [&str; 9] = ["kind", "dimension", "box", "solver", "train", "seed", "output_prefix", "params", "svg"];

fn field<T: DeserializeOwned>(obj: &Map<String, Value>, key: &str) -> Result<Option<T>, ConfigInvalid> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => T::deserialize(v).map(Some).or_else(|e| invalid(key, e.to_string())),
    }
}

fn required<T: DeserializeOwned>(obj: &Map<String, Value>, key: &str) -> Result<T, ConfigInvalid> {
    field(obj, key)?.map_or_else(|| invalid(key, "missing"), Ok)
}

fn params<T: DeserializeOwned + Default>(obj: &Map<String, Value>) -> Result<T, ConfigInvalid> {
    Ok(field(obj, "params")?.unwrap_or_default())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigInvalid> {
        let value: Value = serde_json::from_str(text).or_else(|e| invalid("<document>", e.to_string()))?;
        Self::from_value(&value)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigInvalid> {
        let text = std::fs::read_to_string(path).or_else(|e| invalid("<file>", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_value(value: &Value) -> Result<Self, ConfigInvalid> {
        let Some(obj) = value.as_object() else {
            return invalid("<document>", "expected a JSON object");
        };
        if let Some(key) = obj.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
            return invalid(key, "unknown field");
        }
        let kind: SuiteKind = required(obj, "kind")?;
        let dimension: Option<usize> = field(obj, "dimension")?;
        match dimension {
            None if kind.needs_dimension() => return invalid("dimension", format!("missing (required by {kind})")),
            Some(0) => return invalid("dimension", "must be positive"),
            Some(d) if kind == SuiteKind::Normcmp && d != 1 => return invalid("dimension", "normcmp is one-dimensional"),
            _ => {}
        }
        let domain: Option<AxisBox> = field(obj, "box")?;
        if let (Some(b), Some(d)) = (&domain, dimension) {
            if b.dim() != d {
                return invalid("box", format!("has dimension {} but dimension is {d}", b.dim()));
            }
        }
        let solver: SolverConfig = field(obj, "solver")?.unwrap_or_default();
        solver.validate().or_else(|e| invalid("solver", e.to_string()))?;
        let train: Option<TrainConfig> = field(obj, "train")?;
        if let Some(tc) = &train {
            tc.validate().or_else(|e| invalid("train", e.to_string()))?;
        }
        let seed: u64 = required(obj, "seed")?;
        let output_prefix: String = required(obj, "output_prefix")?;
        if output_prefix.is_empty() || output_prefix.ends_with('/') {
            return invalid("output_prefix", "must name a file prefix");
        }
        let svg = field(obj, "svg")?.unwrap_or(true);
        let params = match kind {
            SuiteKind::FlowAxioms => SuiteParams::FlowAxioms(params(obj)?),
            SuiteKind::Gronwall => SuiteParams::Gronwall(params(obj)?),
            SuiteKind::Fit => SuiteParams::Fit(params(obj)?),
            SuiteKind::Compose => SuiteParams::Compose(params(obj)?),
            SuiteKind::Rescale => SuiteParams::Rescale(params(obj)?),
            SuiteKind::Normcmp => SuiteParams::Normcmp(params(obj)?),
        };
        let config = Self { kind, dimension, domain, solver, train, seed, output_prefix, params, svg };
        config.check_params()?;
        Ok(config)
    }

    fn check_params(&self) -> Result<(), ConfigInvalid> {
        let d = self.dimension.unwrap_or(1);
        match &self.params {
            SuiteParams::FlowAxioms(p) => {
                if p.cases == 0 {
                    return invalid("params.cases", "must be positive");
                }
            }
            SuiteParams::Gronwall(p) => {
                if p.resolution < 2 {
                    return invalid("params.resolution", "must be >= 2");
                }
            }
            SuiteParams::Fit(p) => {
                if p.resolutions.is_empty() || p.resolutions.iter().any(|&n| n < 2) {
                    return invalid("params.resolutions", "needs at least one resolution >= 2");
                }
                if p.gronwall_resolution < 2 {
                    return invalid("params.gronwall_resolution", "must be >= 2");
                }
            }
            SuiteParams::Compose(p) => {
                if !(p.eps > 0.0 && p.eps.is_finite()) {
                    return invalid("params.eps", "must be positive");
                }
                match &p.stages {
                    Some(stages) if stages.is_empty() => return invalid("params.stages", "needs at least one stage"),
                    Some(stages) if stages.iter().any(|s| s.dim() != d) => {
                        return invalid("params.stages", format!("every stage must have dimension {d}"))
                    }
                    None if d != 2 => return invalid("params.stages", "the default demo is two-dimensional"),
                    _ => {}
                }
                match &p.affine {
                    Some(w) if w.dim() != d => return invalid("params.affine", format!("must have dimension {d}")),
                    None if d != 2 => return invalid("params.affine", "the default map is two-dimensional"),
                    _ => {}
                }
                p.options.solver.validate().or_else(|e| invalid("params.options.solver", e.to_string()))?;
            }
            SuiteParams::Rescale(p) => {
                if p.times.is_empty() || p.times.iter().any(|t| !t.is_finite()) {
                    return invalid("params.times", "needs finite times");
                }
                if p.points == 0 {
                    return invalid("params.points", "must be positive");
                }
            }
            SuiteParams::Normcmp(p) => {
                if !(p.p >= 1.0) || !(p.gap_p > 1.0) {
                    return invalid("params.p", "need p >= 1 and gap_p > 1");
                }
                if !(p.ladder_start > p.ladder_end && p.ladder_end > 0.0 && p.ladder_start < 0.5) {
                    return invalid("params.ladder_start", "need 0.5 > ladder_start > ladder_end > 0");
                }
                if !(p.l1_delta > 0.0 && p.l1_delta < 0.5) {
                    return invalid("params.l1_delta", "must lie in (0, 0.5)");
                }
                if !(p.gap_eps > 0.0) {
                    return invalid("params.gap_eps", "must be positive");
                }
            }
        }
        Ok(())
    }

    /// The configured box, or the suite default.
    pub fn domain_or_default(&self) -> AxisBox {
        self.domain.clone().unwrap_or_else(|| self.kind.default_box(self.dimension.unwrap_or(1)))
    }

    /// The configured training setup, or `default`, with the seed replaced
    /// by `seed + offset`.
    pub fn train_or(&self, default: TrainConfig, offset: u64) -> TrainConfig {
        TrainConfig { seed: self.seed.wrapping_add(offset), ..self.train.clone().unwrap_or(default) }
    }
}

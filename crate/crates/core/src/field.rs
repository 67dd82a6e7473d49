//! Lipschitz vector fields with certified Lipschitz bounds.
//!
//! Besides the elementary fields (zero, constant, linear) the zoo contains the
//! two compactly supported constructions whose time-1 maps are non-trivial
//! flow endpoints:
//!
//! * `Bump1d`: `v(x) = ṽ(|x|)·sign(x)` on `R`, with `ṽ ≥ 0` a smooth bump that
//!   vanishes to all orders at the ends of its support.
//! * `RadialRotation`: `X(x) = φ(‖x‖)·A·x` on `R^d`, `d ≥ 2`, with `A`
//!   skew-symmetric and `φ` a smooth bump supported on `[r_inner, r_outer]`.
//!   The flow is `exp(t φ(‖x‖) A) x` because rotations preserve `‖x‖`.
//!
//! `Mlp` is the trainable hypothesis class and `Scaled` multiplies any field by
//! a constant, which turns time rescaling into a field operation.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::ode::Field;

/// Safety factor applied to sampled derivative maxima.
pub const LIPSCHITZ_SAFETY: f64 = 1.1;

/// Smooth bump `s ↦ exp(4 − 1/(s(1−s)))` on `(0, 1)`, zero elsewhere.
/// Normalized so the peak at `s = 1/2` equals 1.
pub fn bump(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        return 0.0;
    }
    (4.0 - 1.0 / (s * (1.0 - s))).exp()
}

pub fn bump_derivative(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        return 0.0;
    }
    let q = s * (1.0 - s);
    bump(s) * (1.0 - 2.0 * s) / (q * q)
}

/// `max |bump'|`, computed once by dense sampling.
pub fn bump_derivative_max() -> f64 {
    static MAX: OnceLock<f64> = OnceLock::new();
    *MAX.get_or_init(|| {
        const N: usize = 200_000;
        (1..N)
            .map(|i| bump_derivative(i as f64 / N as f64).abs())
            .fold(0.0, f64::max)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the output `a = apply(z)`.
    pub fn derivative(self, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DenseLayer {
    /// `out × in`, row-major.
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

/// Multi-layer perceptron `R^d → R^d`. The activation follows every layer
/// except the last, which is affine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MlpRepr", into = "MlpRepr")]
pub struct MlpParams {
    activation: Activation,
    layers: Vec<DenseLayer>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MlpRepr {
    widths: Vec<usize>,
    activation: Activation,
    layers: Vec<DenseLayer>,
}

impl TryFrom<MlpRepr> for MlpParams {
    type Error = Error;

    fn try_from(repr: MlpRepr) -> Result<Self> {
        let params = MlpParams::new(repr.activation, repr.layers)?;
        if params.widths() != repr.widths {
            return Err(Error::InvalidParameter(format!(
                "declared widths {:?} do not match layer shapes {:?}",
                repr.widths,
                params.widths()
            )));
        }
        Ok(params)
    }
}

impl From<MlpParams> for MlpRepr {
    fn from(p: MlpParams) -> Self {
        MlpRepr { widths: p.widths(), activation: p.activation, layers: p.layers }
    }
}

impl MlpParams {
    pub fn new(activation: Activation, layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidParameter("MLP needs at least one layer".into()));
        }
        for (i, layer) in layers.iter().enumerate() {
            if layer.bias.len() != layer.weights.rows() {
                return Err(Error::InvalidParameter(format!("layer {i}: bias length does not match rows")));
            }
            if let Some(next) = layers.get(i + 1) {
                if next.weights.cols() != layer.weights.rows() {
                    return Err(Error::InvalidParameter(format!("layer {}: shape does not chain", i + 1)));
                }
            }
            if !layer.weights.is_finite() || layer.bias.iter().any(|b| !b.is_finite()) {
                return Err(Error::InvalidParameter(format!("layer {i}: non-finite parameter")));
            }
        }
        Ok(Self { activation, layers })
    }

    /// All-zero weights for the given widths.
    pub fn zeros(widths: &[usize], activation: Activation) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::InvalidParameter("MLP widths need input and output".into()));
        }
        let layers = widths
            .windows(2)
            .map(|w| DenseLayer { weights: Matrix::zeros(w[1], w[0]), bias: vec![0.0; w[1]] })
            .collect();
        Self::new(activation, layers)
    }

    pub fn widths(&self) -> Vec<usize> {
        std::iter::once(self.layers[0].weights.cols())
            .chain(self.layers.iter().map(|l| l.weights.rows()))
            .collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].weights.rows()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.as_slice().len() + l.bias.len()).sum()
    }

    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        let mut current = x.to_vec();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut next = layer.bias.clone();
            for (n, row) in next.iter_mut().zip(0..layer.weights.rows()) {
                *n += layer.weights.row(row).iter().zip(&current).map(|(w, c)| w * c).sum::<f64>();
            }
            if i != last {
                next.iter_mut().for_each(|v| *v = self.activation.apply(*v));
            }
            current = next;
        }
        out.copy_from_slice(&current);
    }

    /// Product of layer operator norms; both activations are 1-Lipschitz.
    pub fn lipschitz_bound(&self) -> f64 {
        self.layers.iter().map(|l| l.weights.op_norm()).product()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldKind {
    Zero,
    Constant {
        c: Vec<f64>,
    },
    Linear {
        a: Matrix,
    },
    #[serde(rename = "bump1d")]
    Bump1d {
        center: f64,
        width: f64,
        amplitude: f64,
    },
    RadialRotation {
        a: Matrix,
        r_inner: f64,
        r_outer: f64,
    },
    Mlp {
        params: MlpParams,
    },
    Scaled {
        factor: f64,
        inner: Box<VectorField>,
    },
}

/// A validated Lipschitz vector field on `R^dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FieldRepr", into = "FieldRepr")]
pub struct VectorField {
    dim: usize,
    kind: FieldKind,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldRepr {
    dim: usize,
    variant: FieldKind,
}

impl TryFrom<FieldRepr> for VectorField {
    type Error = Error;

    fn try_from(repr: FieldRepr) -> Result<Self> {
        VectorField::new(repr.dim, repr.variant)
    }
}

impl From<VectorField> for FieldRepr {
    fn from(f: VectorField) -> Self {
        FieldRepr { dim: f.dim, variant: f.kind }
    }
}

fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}

impl VectorField {
    pub fn new(dim: usize, kind: FieldKind) -> Result<Self> {
        if dim == 0 {
            return invalid("field dimension must be positive");
        }
        let square = |a: &Matrix| a.rows() == dim && a.cols() == dim && a.is_finite();
        match &kind {
            FieldKind::Zero => {}
            FieldKind::Constant { c } => {
                if c.len() != dim || c.iter().any(|v| !v.is_finite()) {
                    return invalid(format!("constant field needs {dim} finite components"));
                }
            }
            FieldKind::Linear { a } => {
                if !square(a) {
                    return invalid(format!("linear field needs a finite {dim}x{dim} matrix"));
                }
            }
            FieldKind::Bump1d { center, width, amplitude } => {
                if dim != 1 {
                    return invalid("bump1d fields live in dimension 1");
                }
                if !(width.is_finite() && *width > 0.0 && center.is_finite()) {
                    return invalid("bump1d needs a finite center and positive width");
                }
                if center - width / 2.0 < 0.0 {
                    return invalid("bump1d profile must be supported in [0, inf)");
                }
                if !(amplitude.is_finite() && *amplitude >= 0.0) {
                    return invalid("bump1d amplitude must be finite and non-negative");
                }
            }
            FieldKind::RadialRotation { a, r_inner, r_outer } => {
                if dim < 2 {
                    return invalid("radial rotation needs dimension >= 2");
                }
                if !square(a) || !a.is_skew_symmetric() {
                    return invalid("radial rotation needs a skew-symmetric matrix");
                }
                if !(*r_inner > 0.0 && r_inner < r_outer && r_outer.is_finite()) {
                    return invalid("radial rotation needs 0 < r_inner < r_outer");
                }
            }
            FieldKind::Mlp { params } => {
                if params.input_dim() != dim || params.output_dim() != dim {
                    return invalid(format!("MLP widths {:?} do not map R^{dim} to itself", params.widths()));
                }
            }
            FieldKind::Scaled { factor, inner } => {
                if !factor.is_finite() {
                    return invalid("scale factor must be finite");
                }
                if inner.dim != dim {
                    return Err(Error::DimensionMismatch { expected: dim, actual: inner.dim });
                }
            }
        }
        Ok(Self { dim, kind })
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(dim, FieldKind::Zero).expect("positive dimension")
    }

    pub fn constant(c: Vec<f64>) -> Result<Self> {
        Self::new(c.len(), FieldKind::Constant { c })
    }

    pub fn linear(a: Matrix) -> Result<Self> {
        Self::new(a.rows(), FieldKind::Linear { a })
    }

    pub fn bump_1d(center: f64, width: f64, amplitude: f64) -> Result<Self> {
        Self::new(1, FieldKind::Bump1d { center, width, amplitude })
    }

    pub fn radial_rotation(a: Matrix, r_inner: f64, r_outer: f64) -> Result<Self> {
        Self::new(a.rows(), FieldKind::RadialRotation { a, r_inner, r_outer })
    }

    pub fn mlp(params: MlpParams) -> Result<Self> {
        Self::new(params.input_dim(), FieldKind::Mlp { params })
    }

    pub fn scaled(factor: f64, inner: VectorField) -> Result<Self> {
        Self::new(inner.dim, FieldKind::Scaled { factor, inner: Box::new(inner) })
    }

    /// `Scaled(-1, self)`: its time-`t` flow is this field's time-`-t` flow.
    pub fn negated(&self) -> Self {
        Self::scaled(-1.0, self.clone()).expect("valid field")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    pub fn as_mlp(&self) -> Option<&MlpParams> {
        match &self.kind {
            FieldKind::Mlp { params } => Some(params),
            _ => None,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match &self.kind {
            FieldKind::Zero => "zero",
            FieldKind::Constant { .. } => "constant",
            FieldKind::Linear { .. } => "linear",
            FieldKind::Bump1d { .. } => "bump1d",
            FieldKind::RadialRotation { .. } => "radial_rotation",
            FieldKind::Mlp { .. } => "mlp",
            FieldKind::Scaled { .. } => "scaled",
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, actual: x.len() });
        }
        let mut out = vec![0.0; self.dim];
        self.eval_unchecked(x, &mut out);
        Ok(out)
    }

    fn eval_unchecked(&self, x: &[f64], out: &mut [f64]) {
        match &self.kind {
            FieldKind::Zero => out.iter_mut().for_each(|v| *v = 0.0),
            FieldKind::Constant { c } => out.copy_from_slice(c),
            FieldKind::Linear { a } => a.mul_vec_into(x, out),
            FieldKind::Bump1d { center, width, amplitude } => {
                let r = x[0].abs();
                let s = (r - (center - width / 2.0)) / width;
                out[0] = if x[0] == 0.0 { 0.0 } else { amplitude * bump(s) * x[0].signum() };
            }
            FieldKind::RadialRotation { a, r_inner, r_outer } => {
                let phi = radial_profile(crate::linalg::norm(x), *r_inner, *r_outer);
                if phi == 0.0 {
                    out.iter_mut().for_each(|v| *v = 0.0);
                } else {
                    a.mul_vec_into(x, out);
                    out.iter_mut().for_each(|v| *v *= phi);
                }
            }
            FieldKind::Mlp { params } => params.eval_into(x, out),
            FieldKind::Scaled { factor, inner } => {
                inner.eval_unchecked(x, out);
                out.iter_mut().for_each(|v| *v *= factor);
            }
        }
    }

    /// Certified upper bound on the global Lipschitz constant.
    pub fn lipschitz_bound(&self) -> f64 {
        match &self.kind {
            FieldKind::Zero | FieldKind::Constant { .. } => 0.0,
            FieldKind::Linear { a } => a.op_norm(),
            FieldKind::Bump1d { width, amplitude, .. } => {
                LIPSCHITZ_SAFETY * amplitude.abs() * bump_derivative_max() / width
            }
            FieldKind::RadialRotation { a, r_inner, r_outer } => {
                // ‖DX(x)‖ ≤ ‖A‖·(φ(r) + r|φ'(r)|) with r = ‖x‖.
                const N: usize = 4096;
                let width = r_outer - r_inner;
                let peak = (0..=N)
                    .map(|i| {
                        let s = i as f64 / N as f64;
                        let r = r_inner + s * width;
                        bump(s) + r * bump_derivative(s).abs() / width
                    })
                    .fold(0.0, f64::max);
                LIPSCHITZ_SAFETY * a.op_norm() * peak
            }
            FieldKind::Mlp { params } => params.lipschitz_bound(),
            FieldKind::Scaled { factor, inner } => factor.abs() * inner.lipschitz_bound(),
        }
    }

    /// Radius `R` such that the field vanishes outside the closed ball of
    /// radius `R`, when the field is compactly supported.
    pub fn support_radius(&self) -> Option<f64> {
        match &self.kind {
            FieldKind::Zero => Some(0.0),
            FieldKind::Bump1d { center, width, .. } => Some(center + width / 2.0),
            FieldKind::RadialRotation { r_outer, .. } => Some(*r_outer),
            FieldKind::Scaled { factor, inner } => {
                if *factor == 0.0 {
                    Some(0.0)
                } else {
                    inner.support_radius()
                }
            }
            _ => None,
        }
    }

    /// Exact flow `Φ(x, t)` for the variants that have one.
    pub fn closed_form_flow(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, actual: x.len() });
        }
        match &self.kind {
            FieldKind::Zero => Ok(x.to_vec()),
            FieldKind::Constant { c } => Ok(x.iter().zip(c).map(|(xi, ci)| xi + t * ci).collect()),
            FieldKind::Linear { a } => Ok(a.scale(t).exp().mul_vec(x)),
            FieldKind::RadialRotation { a, r_inner, r_outer } => {
                let phi = radial_profile(crate::linalg::norm(x), *r_inner, *r_outer);
                if phi == 0.0 {
                    return Ok(x.to_vec());
                }
                Ok(a.scale(t * phi).exp().mul_vec(x))
            }
            FieldKind::Scaled { factor, inner } => inner.closed_form_flow(x, factor * t),
            FieldKind::Bump1d { .. } => Err(Error::NoClosedForm("bump1d")),
            FieldKind::Mlp { .. } => Err(Error::NoClosedForm("mlp")),
        }
    }
}

/// `φ(r)`: the unit-peak bump rescaled to `[r_inner, r_outer]`.
pub fn radial_profile(r: f64, r_inner: f64, r_outer: f64) -> f64 {
    bump((r - r_inner) / (r_outer - r_inner))
}

impl Field for VectorField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        self.eval_unchecked(x, out)
    }
}

/// Matrix exponential, re-exported for the closed-form flows.
pub fn matrix_exp(m: &Matrix) -> Matrix {
    m.exp()
}

//! `INN(H)`: an invertible affine map applied after a chain of flow endpoints.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::FlowEndpoint;
use crate::linalg::{Lu, Matrix};

/// Smallest `|det W|` accepted for an affine map.
pub const DET_THRESHOLD: f64 = 1e-12;

pub const SCHEMA_VERSION: u32 = 1;

/// `x ↦ W x + b` with `W` invertible.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "AffineRepr", into = "AffineRepr")]
pub struct AffineMap {
    matrix: Matrix,
    bias: Vec<f64>,
    lu: Lu,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AffineRepr {
    matrix: Matrix,
    bias: Vec<f64>,
}

impl TryFrom<AffineRepr> for AffineMap {
    type Error = Error;

    fn try_from(r: AffineRepr) -> Result<Self> {
        AffineMap::new(r.matrix, r.bias)
    }
}

impl From<AffineMap> for AffineRepr {
    fn from(a: AffineMap) -> Self {
        AffineRepr { matrix: a.matrix, bias: a.bias }
    }
}

impl PartialEq for AffineMap {
    fn eq(&self, other: &Self) -> bool {
        self.matrix == other.matrix && self.bias == other.bias
    }
}

impl AffineMap {
    pub fn new(matrix: Matrix, bias: Vec<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.rows() != bias.len() {
            return Err(Error::InvalidParameter(format!(
                "affine map needs a square matrix matching the bias length {}",
                bias.len()
            )));
        }
        if !matrix.is_finite() || bias.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidParameter("affine map has non-finite entries".into()));
        }
        let lu = matrix.lu()?;
        if lu.det().abs() <= DET_THRESHOLD {
            return Err(Error::SingularAffine { det: lu.det() });
        }
        Ok(Self { matrix, bias, lu })
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(Matrix::identity(dim), vec![0.0; dim]).expect("identity is invertible")
    }

    pub fn dim(&self) -> usize {
        self.bias.len()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn det(&self) -> f64 {
        self.lu.det()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.matrix.mul_vec(x);
        y.iter_mut().zip(&self.bias).for_each(|(yi, bi)| *yi += bi);
        y
    }

    pub fn apply_inverse(&self, y: &[f64]) -> Vec<f64> {
        let shifted: Vec<f64> = y.iter().zip(&self.bias).map(|(yi, bi)| yi - bi).collect();
        self.lu.solve(&shifted)
    }

    /// Spectral norm of `W`.
    pub fn op_norm(&self) -> f64 {
        self.matrix.op_norm()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelFile", into = "ModelFile")]
pub struct InnModel {
    endpoints: Vec<FlowEndpoint>,
    affine: AffineMap,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    schema_version: u32,
    affine: AffineMap,
    endpoints: Vec<FlowEndpoint>,
}

impl TryFrom<ModelFile> for InnModel {
    type Error = Error;

    fn try_from(file: ModelFile) -> Result<Self> {
        if file.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidParameter(format!(
                "unsupported model schema version {}",
                file.schema_version
            )));
        }
        InnModel::new(file.endpoints, file.affine)
    }
}

impl From<InnModel> for ModelFile {
    fn from(m: InnModel) -> Self {
        ModelFile { schema_version: SCHEMA_VERSION, affine: m.affine, endpoints: m.endpoints }
    }
}

impl InnModel {
    pub fn new(endpoints: Vec<FlowEndpoint>, affine: AffineMap) -> Result<Self> {
        let dim = affine.dim();
        if let Some(bad) = endpoints.iter().find(|e| e.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, actual: bad.dim() });
        }
        Ok(Self { endpoints, affine })
    }

    pub fn dim(&self) -> usize {
        self.affine.dim()
    }

    pub fn endpoints(&self) -> &[FlowEndpoint] {
        &self.endpoints
    }

    pub fn affine(&self) -> &AffineMap {
        &self.affine
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: x.len() });
        }
        Ok(())
    }

    /// `W ∘ ψ_k ∘ … ∘ ψ_1`.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        let mut z = x.to_vec();
        for ep in &self.endpoints {
            z = ep.apply(&z)?;
        }
        Ok(self.affine.apply(&z))
    }

    pub fn inverse(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check(y)?;
        let mut z = self.affine.apply_inverse(y);
        for ep in self.endpoints.iter().rev() {
            z = ep.apply_inverse(&z)?;
        }
        Ok(z)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }
}

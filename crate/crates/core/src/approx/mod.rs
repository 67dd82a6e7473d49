//! Sup-norm estimation on boxes, reach sets, the Grönwall endpoint bound,
//! MLP field fitting and compositional approximation.

mod compose;
mod fit;
mod gronwall;

pub use compose::{approximate_composition, approximate_composition_with, ComposeOptions, CompositionReport, StageReport};
pub use fit::{fit_field, FitReport, Optimizer, TrainConfig};
pub use gronwall::{gronwall_report, gronwall_verify, ApproxReport, REACH_TIME_POINTS};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::distance;
use crate::ode::{trajectory, Field, SolverConfig};

/// Upper limit on the number of grid points in one evaluation.
pub const MAX_GRID_POINTS: u128 = 10_000_000;

/// Axis-aligned box `[lower, upper] ⊂ R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BoxRepr", into = "BoxRepr")]
pub struct AxisBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoxRepr {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl TryFrom<BoxRepr> for AxisBox {
    type Error = Error;

    fn try_from(r: BoxRepr) -> Result<Self> {
        AxisBox::new(r.lower, r.upper)
    }
}

impl From<AxisBox> for BoxRepr {
    fn from(b: AxisBox) -> Self {
        BoxRepr { lower: b.lower, upper: b.upper }
    }
}

impl AxisBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), actual: upper.len() });
        }
        if lower.is_empty() {
            return Err(Error::InvalidParameter("box must have dimension >= 1".into()));
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !l.is_finite() || !u.is_finite() || l > u {
                return Err(Error::InvalidParameter(format!("box axis {i}: need finite lower <= upper, got [{l}, {u}]")));
            }
        }
        Ok(Self { lower, upper })
    }

    /// `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    /// Smallest box containing every point.
    pub fn bounding<'a>(points: impl IntoIterator<Item = &'a [f64]>) -> Result<Self> {
        let mut iter = points.into_iter();
        let first = iter.next().ok_or_else(|| Error::InvalidParameter("bounding box of no points".into()))?;
        let (mut lower, mut upper) = (first.to_vec(), first.to_vec());
        for p in iter {
            if p.len() != lower.len() {
                return Err(Error::DimensionMismatch { expected: lower.len(), actual: p.len() });
            }
            for i in 0..p.len() {
                lower[i] = lower[i].min(p[i]);
                upper[i] = upper[i].max(p[i]);
            }
        }
        Self::new(lower, upper)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (l, u))| l <= v && v <= u)
    }

    pub fn contains_box(&self, other: &AxisBox) -> bool {
        self.contains(&other.lower) && self.contains(&other.upper)
    }

    /// Points per axis actually used at `resolution`: degenerate axes get one.
    fn axis_counts(&self, resolution: usize) -> Vec<usize> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| if l == u { 1 } else { resolution }).collect()
    }

    pub fn grid_len(&self, resolution: usize) -> u128 {
        self.axis_counts(resolution).iter().map(|&n| n as u128).product()
    }

    /// Coordinate `i` of `n` on axis `axis`. Computed as `l + (i/(n−1))·w`
    /// so that the grid at `2n − 1` points contains the grid at `n` points
    /// bit for bit.
    fn coordinate(&self, axis: usize, i: usize, n: usize) -> f64 {
        let (l, u) = (self.lower[axis], self.upper[axis]);
        if n == 1 {
            return l;
        }
        if i + 1 == n {
            return u;
        }
        l + (i as f64 / (n - 1) as f64) * (u - l)
    }

    fn check_grid(&self, resolution: usize) -> Result<Vec<usize>> {
        if resolution < 2 {
            return Err(Error::InvalidParameter(format!("grid resolution must be >= 2, got {resolution}")));
        }
        let points = self.grid_len(resolution);
        if points > MAX_GRID_POINTS {
            return Err(Error::GridTooLarge { points, limit: MAX_GRID_POINTS });
        }
        Ok(self.axis_counts(resolution))
    }

    /// Point number `index` of the grid, last axis fastest.
    fn grid_point(&self, counts: &[usize], mut index: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        for axis in (0..self.dim()).rev() {
            let n = counts[axis];
            x[axis] = self.coordinate(axis, index % n, n);
            index /= n;
        }
        x
    }

    /// Uniform grid with `resolution` points per axis, corners included.
    pub fn grid(&self, resolution: usize) -> Result<Vec<Vec<f64>>> {
        let counts = self.check_grid(resolution)?;
        let total: usize = counts.iter().product();
        Ok((0..total).map(|i| self.grid_point(&counts, i)).collect())
    }

    pub fn union(&self, other: &AxisBox) -> Result<AxisBox> {
        if other.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: other.dim() });
        }
        let lower = self.lower.iter().zip(&other.lower).map(|(a, b)| a.min(*b)).collect();
        let upper = self.upper.iter().zip(&other.upper).map(|(a, b)| a.max(*b)).collect();
        AxisBox::new(lower, upper)
    }
}

/// Extends every coordinate interval by `margin` on both sides.
pub fn inflate(k: &AxisBox, margin: f64) -> Result<AxisBox> {
    if !(margin >= 0.0) || !margin.is_finite() {
        return Err(Error::InvalidParameter(format!("inflation margin must be finite and >= 0, got {margin}")));
    }
    AxisBox::new(
        k.lower.iter().map(|l| l - margin).collect(),
        k.upper.iter().map(|u| u + margin).collect(),
    )
}

/// Maximum of `‖f(x) − g(x)‖` over the uniform grid on `k`. This is a lower
/// bound for the supremum over `k`.
pub fn sup_distance<F, G>(f: F, g: G, k: &AxisBox, resolution: usize) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
    G: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    let counts = k.check_grid(resolution)?;
    let total: usize = counts.iter().product();
    (0..total)
        .into_par_iter()
        .map(|i| {
            let x = k.grid_point(&counts, i);
            let (fx, gx) = (f(&x)?, g(&x)?);
            if fx.len() != gx.len() {
                return Err(Error::DimensionMismatch { expected: fx.len(), actual: gx.len() });
            }
            Ok(distance(&fx, &gx))
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

/// Largest ratio `‖g(x) − g(y)‖ / ‖x − y‖` over grid neighbours on `k`.
/// A sampled lower estimate of the Lipschitz constant of `g` on `k`.
pub fn sampled_lipschitz<G>(g: G, k: &AxisBox, resolution: usize) -> Result<f64>
where
    G: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    let counts = k.check_grid(resolution)?;
    let total: usize = counts.iter().product();
    let values: Vec<Vec<f64>> =
        (0..total).into_par_iter().map(|i| g(&k.grid_point(&counts, i))).collect::<Result<_>>()?;
    let mut stride = 1;
    let mut strides = vec![0; k.dim()];
    for axis in (0..k.dim()).rev() {
        strides[axis] = stride;
        stride *= counts[axis];
    }
    let best = (0..total)
        .into_par_iter()
        .map(|i| {
            let x = k.grid_point(&counts, i);
            let mut worst = 0.0f64;
            for axis in 0..k.dim() {
                let pos = (i / strides[axis]) % counts[axis];
                if pos + 1 < counts[axis] {
                    let j = i + strides[axis];
                    let y = k.grid_point(&counts, j);
                    let h = distance(&x, &y);
                    if h > 0.0 {
                        worst = worst.max(distance(&values[i], &values[j]) / h);
                    }
                }
            }
            worst
        })
        .reduce(|| 0.0, f64::max);
    Ok(best)
}

/// Bounding box of `{φ(F, x, t) : x ∈ grid(K, n_space), t ∈ grid([0,1], n_time)}`.
pub fn reach_box<F: Field + ?Sized>(
    field: &F,
    k: &AxisBox,
    n_space: usize,
    n_time: usize,
    cfg: &SolverConfig,
) -> Result<AxisBox> {
    if n_time < 2 {
        return Err(Error::InvalidParameter(format!("n_time must be >= 2, got {n_time}")));
    }
    if field.dim() != k.dim() {
        return Err(Error::DimensionMismatch { expected: field.dim(), actual: k.dim() });
    }
    let counts = k.check_grid(n_space)?;
    let total: usize = counts.iter().product();
    let times: Vec<f64> = (0..n_time).map(|i| i as f64 / (n_time - 1) as f64).collect();
    let d = k.dim();
    let (lower, upper) = (0..total)
        .into_par_iter()
        .map(|i| {
            let traj = trajectory(field, &k.grid_point(&counts, i), &times, cfg)?;
            let mut lo = vec![f64::INFINITY; d];
            let mut hi = vec![f64::NEG_INFINITY; d];
            for p in &traj.points {
                for a in 0..d {
                    lo[a] = lo[a].min(p[a]);
                    hi[a] = hi[a].max(p[a]);
                }
            }
            Ok::<_, Error>((lo, hi))
        })
        .try_reduce(
            || (vec![f64::INFINITY; d], vec![f64::NEG_INFINITY; d]),
            |(mut lo, mut hi), (l2, h2)| {
                for a in 0..d {
                    lo[a] = lo[a].min(l2[a]);
                    hi[a] = hi[a].max(h2[a]);
                }
                Ok((lo, hi))
            },
        )?;
    AxisBox::new(lower, upper)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::VectorField;
    use crate::linalg::Matrix;

    fn id(x: &[f64]) -> Result<Vec<f64>> {
        Ok(x.to_vec())
    }

    #[test]
    fn grid_has_corners_and_collapses_degenerate_axes() {
        let k = AxisBox::new(vec![0.0, 2.0], vec![1.0, 2.0]).unwrap();
        let g = k.grid(5).unwrap();
        assert_eq!(g.len(), 5);
        assert_eq!(g[0], vec![0.0, 2.0]);
        assert_eq!(g[4], vec![1.0, 2.0]);
        let sq = AxisBox::cube(2, -1.0, 1.0).unwrap();
        let g = sq.grid(3).unwrap();
        assert_eq!(g.len(), 9);
        for c in [[-1.0, -1.0], [-1.0, 1.0], [1.0, -1.0], [1.0, 1.0]] {
            assert!(g.iter().any(|p| p[..] == c[..]));
        }
    }

    #[test]
    fn refined_grid_contains_coarse_grid() {
        let k = AxisBox::new(vec![-0.3, 1.1], vec![2.7, 1.9]).unwrap();
        let coarse = k.grid(7).unwrap();
        let fine = k.grid(13).unwrap();
        for p in &coarse {
            assert!(fine.contains(p));
        }
    }

    #[test]
    fn invalid_boxes_and_grids() {
        assert!(AxisBox::new(vec![1.0], vec![0.0]).is_err());
        assert!(AxisBox::new(vec![0.0], vec![0.0, 1.0]).is_err());
        assert!(AxisBox::new(vec![f64::NAN], vec![1.0]).is_err());
        let k = AxisBox::cube(4, 0.0, 1.0).unwrap();
        assert!(matches!(sup_distance(id, id, &k, 100), Err(Error::GridTooLarge { .. })));
        assert!(sup_distance(id, id, &k, 1).is_err());
    }

    #[test]
    fn sup_distance_examples() {
        let k = AxisBox::cube(3, -1.0, 1.0).unwrap();
        assert_eq!(sup_distance(id, id, &k, 5).unwrap(), 0.0);
        let shift = |x: &[f64]| Ok(x.iter().map(|v| v + 0.3).collect());
        let d = sup_distance(id, shift, &k, 5).unwrap();
        assert!((d - 0.3 * 3f64.sqrt()).abs() < 1e-12);

        let line = AxisBox::new(vec![0.0], vec![std::f64::consts::PI]).unwrap();
        let d = sup_distance(|x: &[f64]| Ok(vec![x[0].sin()]), |_: &[f64]| Ok(vec![0.0]), &line, 101).unwrap();
        assert!((d - 1.0).abs() < 1e-3);
    }

    #[test]
    fn inflate_examples() {
        let k = AxisBox::cube(2, 0.0, 1.0).unwrap();
        assert_eq!(inflate(&k, 0.0).unwrap(), k);
        assert_eq!(inflate(&k, 2.0 * 0f64.exp()).unwrap(), AxisBox::cube(2, -2.0, 3.0).unwrap());
        let m = 2.0 * 0.5f64.exp();
        let big = inflate(&AxisBox::cube(1, -1.0, 1.0).unwrap(), m).unwrap();
        assert!((big.upper()[0] - 4.2974425414).abs() < 1e-9);
        assert!((big.lower()[0] + 4.2974425414).abs() < 1e-9);
        assert!(inflate(&k, -1.0).is_err());
    }

    #[test]
    fn reach_box_examples() {
        let cfg = SolverConfig::default();
        let k = AxisBox::cube(2, -0.5, 1.0).unwrap();
        assert_eq!(reach_box(&VectorField::zero(2), &k, 5, 3, &cfg).unwrap(), k);

        let unit = AxisBox::cube(1, 0.0, 1.0).unwrap();
        let r = reach_box(&VectorField::constant(vec![1.0]).unwrap(), &unit, 5, 5, &cfg).unwrap();
        assert!((r.lower()[0]).abs() < 1e-14 && (r.upper()[0] - 2.0).abs() < 1e-14);

        // Rotation of the unit square by angles in [0, 1]: oracle sweeps the
        // rotated corners analytically.
        let rot = VectorField::linear(Matrix::unit_skew(2)).unwrap();
        let sq = AxisBox::cube(2, 0.0, 1.0).unwrap();
        let n_time = 41;
        let r = reach_box(&rot, &sq, 2, n_time, &cfg).unwrap();
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for i in 0..n_time {
            let t = i as f64 / (n_time - 1) as f64;
            for c in [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]] {
                let p = rot.closed_form_flow(&c, t).unwrap();
                for a in 0..2 {
                    lo[a] = lo[a].min(p[a]);
                    hi[a] = hi[a].max(p[a]);
                }
            }
        }
        for a in 0..2 {
            assert!((r.lower()[a] - lo[a]).abs() < 1e-9);
            assert!((r.upper()[a] - hi[a]).abs() < 1e-9);
        }
    }

    #[test]
    fn sampled_lipschitz_of_linear_map() {
        let k = AxisBox::cube(2, -1.0, 1.0).unwrap();
        let a = Matrix::diag(&[3.0, 0.5]);
        let l = sampled_lipschitz(|x: &[f64]| Ok(a.mul_vec(x)), &k, 9).unwrap();
        assert!((l - 3.0).abs() < 1e-12);
    }
}

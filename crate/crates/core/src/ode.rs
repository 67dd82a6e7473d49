//! Numerical solution of autonomous initial value problems `ż = f(z)`,
//! `z(0) = x`.
//!
//! Two integrators are offered: classical fixed-step RK4 (the default, fully
//! reproducible) and an adaptive Dormand–Prince 5(4) pair. Negative times
//! integrate the negated field forward, which is exact for autonomous systems.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An autonomous vector field on `R^d`.
pub trait Field: Sync {
    fn dim(&self) -> usize;

    /// Writes `f(x)` into `out`. Both slices have length `dim()`.
    fn eval_into(&self, x: &[f64], out: &mut [f64]);
}

impl<F: Field + ?Sized> Field for &F {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        (**self).eval_into(x, out)
    }
}

struct Negated<'a, F: ?Sized>(&'a F);

impl<F: Field + ?Sized> Field for Negated<'_, F> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        self.0.eval_into(x, out);
        out.iter_mut().for_each(|v| *v = -*v);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    FixedRk4,
    AdaptiveDp54,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub method: Method,
    /// Fixed method: steps per unit time.
    pub step_count: u32,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: Method::FixedRk4,
            step_count: 256,
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_steps: 10_000_000,
        }
    }
}

impl SolverConfig {
    pub fn fixed(step_count: u32) -> Self {
        Self { step_count, ..Self::default() }
    }

    pub fn adaptive(rel_tol: f64, abs_tol: f64) -> Self {
        Self { method: Method::AdaptiveDp54, rel_tol, abs_tol, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(format!("solver config: {msg}")));
        if self.step_count < 1 {
            return bad("step_count must be >= 1");
        }
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if self.max_steps < u64::from(self.step_count) {
            return bad("max_steps must be >= step_count");
        }
        Ok(())
    }

    /// Budget for integrating to `|time|` a field with Lipschitz bound
    /// `lipschitz`: the per-unit step count is multiplied by `ceil(|time|)`
    /// and by `ceil(lipschitz / 8)` so that the step stays commensurate with
    /// the field's time scale.
    pub fn scaled_for(&self, time: f64, lipschitz: f64) -> Self {
        let time_factor = time.abs().ceil().max(1.0);
        let lip_factor = (lipschitz / 8.0).ceil().max(1.0);
        let step_count = (f64::from(self.step_count) * time_factor * lip_factor).min(u32::MAX as f64) as u32;
        Self {
            step_count,
            max_steps: self.max_steps.max(u64::from(step_count)),
            ..*self
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
}

fn check_dim(field: &(impl Field + ?Sized), x: &[f64]) -> Result<()> {
    if field.dim() != x.len() {
        return Err(Error::DimensionMismatch { expected: field.dim(), actual: x.len() });
    }
    Ok(())
}

/// Numerical `z(t)` for `ż = f(z)`, `z(0) = x0`.
pub fn integrate<F: Field + ?Sized>(field: &F, x0: &[f64], t: f64, cfg: &SolverConfig) -> Result<Vec<f64>> {
    check_dim(field, x0)?;
    cfg.validate()?;
    if !t.is_finite() {
        return Err(Error::InvalidParameter(format!("integration time {t} is not finite")));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteState { time: 0.0, steps: 0 });
    }
    if t == 0.0 {
        return Ok(x0.to_vec());
    }
    if t < 0.0 {
        return integrate_forward(&Negated(field), x0, -t, cfg);
    }
    integrate_forward(field, x0, t, cfg)
}

fn integrate_forward<F: Field + ?Sized>(field: &F, x0: &[f64], t: f64, cfg: &SolverConfig) -> Result<Vec<f64>> {
    match cfg.method {
        Method::FixedRk4 => rk4(field, x0, t, cfg),
        Method::AdaptiveDp54 => dopri5(field, x0, t, cfg),
    }
}

/// Samples the solution at each of `times` (sorted ascending or descending),
/// stepping incrementally between consecutive times.
pub fn trajectory<F: Field + ?Sized>(field: &F, x0: &[f64], times: &[f64], cfg: &SolverConfig) -> Result<Trajectory> {
    check_dim(field, x0)?;
    let ascending = times.windows(2).all(|w| w[0] <= w[1]);
    let descending = times.windows(2).all(|w| w[0] >= w[1]);
    if !(ascending || descending) {
        return Err(Error::InvalidParameter("trajectory times must be sorted".into()));
    }
    let mut points = Vec::with_capacity(times.len());
    let mut current = x0.to_vec();
    let mut now = 0.0;
    for &t in times {
        current = integrate(field, &current, t - now, cfg)?;
        now = t;
        points.push(current.clone());
    }
    Ok(Trajectory { times: times.to_vec(), points })
}

struct Scratch {
    k: [Vec<f64>; 7],
    stage: Vec<f64>,
}

impl Scratch {
    fn new(d: usize) -> Self {
        Self { k: std::array::from_fn(|_| vec![0.0; d]), stage: vec![0.0; d] }
    }
}

fn rk4<F: Field + ?Sized>(field: &F, x0: &[f64], t: f64, cfg: &SolverConfig) -> Result<Vec<f64>> {
    let steps = (t * f64::from(cfg.step_count)).ceil().max(1.0);
    if steps > cfg.max_steps as f64 {
        return Err(Error::MaxStepsExceeded { max_steps: cfg.max_steps });
    }
    let steps = steps as usize;
    let h = t / steps as f64;
    let mut x = x0.to_vec();
    let mut s = Scratch::new(x.len());
    for step in 0..steps {
        let [k1, k2, k3, k4, ..] = &mut s.k;
        field.eval_into(&x, k1);
        for ((st, xi), ki) in s.stage.iter_mut().zip(&x).zip(k1.iter()) {
            *st = xi + 0.5 * h * ki;
        }
        field.eval_into(&s.stage, k2);
        for ((st, xi), ki) in s.stage.iter_mut().zip(&x).zip(k2.iter()) {
            *st = xi + 0.5 * h * ki;
        }
        field.eval_into(&s.stage, k3);
        for ((st, xi), ki) in s.stage.iter_mut().zip(&x).zip(k3.iter()) {
            *st = xi + h * ki;
        }
        field.eval_into(&s.stage, k4);
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { time: (step + 1) as f64 * h, steps: step + 1 });
        }
    }
    Ok(x)
}

// Dormand–Prince 5(4) tableau. The system is autonomous, so the nodes c_i are unused.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn dopri5<F: Field + ?Sized>(field: &F, x0: &[f64], t_end: f64, cfg: &SolverConfig) -> Result<Vec<f64>> {
    let d = x0.len();
    let mut x = x0.to_vec();
    let mut next = vec![0.0; d];
    let mut s = Scratch::new(d);
    let mut t = 0.0;
    let mut h = (t_end / f64::from(cfg.step_count)).min(t_end);
    let mut attempts: u64 = 0;
    field.eval_into(&x, &mut s.k[0]);
    while t < t_end {
        if attempts >= cfg.max_steps {
            return Err(Error::MaxStepsExceeded { max_steps: cfg.max_steps });
        }
        attempts += 1;
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        for stage in 1..7 {
            for i in 0..d {
                let incr: f64 = (0..stage).map(|j| A[stage][j] * s.k[j][i]).sum();
                s.stage[i] = x[i] + h * incr;
            }
            let (_, rest) = s.k.split_at_mut(stage);
            field.eval_into(&s.stage, &mut rest[0]);
        }
        let mut err_sq = 0.0;
        for i in 0..d {
            let hi: f64 = (0..7).map(|j| B5[j] * s.k[j][i]).sum();
            let lo: f64 = (0..7).map(|j| B4[j] * s.k[j][i]).sum();
            next[i] = x[i] + h * hi;
            let scale = cfg.abs_tol + cfg.rel_tol * x[i].abs().max(next[i].abs());
            err_sq += (h * (hi - lo) / scale).powi(2);
        }
        let err = (err_sq / d as f64).sqrt();
        if !err.is_finite() || next.iter().any(|v| !v.is_finite()) {
            if h <= f64::EPSILON * t_end.max(1.0) {
                return Err(Error::NonFiniteState { time: t, steps: attempts as usize });
            }
            h *= 0.2;
            continue;
        }
        if err <= 1.0 {
            t = if last { t_end } else { t + h };
            std::mem::swap(&mut x, &mut next);
            // First-same-as-last: stage 7 was evaluated at the accepted point.
            let (first, rest) = s.k.split_at_mut(6);
            first[0].copy_from_slice(&rest[0]);
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) struct Linear(pub [[f64; 2]; 2]);

    impl Field for Linear {
        fn dim(&self) -> usize {
            2
        }

        fn eval_into(&self, x: &[f64], out: &mut [f64]) {
            out[0] = self.0[0][0] * x[0] + self.0[0][1] * x[1];
            out[1] = self.0[1][0] * x[0] + self.0[1][1] * x[1];
        }
    }

    struct Constant(Vec<f64>);

    impl Field for Constant {
        fn dim(&self) -> usize {
            self.0.len()
        }

        fn eval_into(&self, _x: &[f64], out: &mut [f64]) {
            out.copy_from_slice(&self.0);
        }
    }

    const ROT: Linear = Linear([[0.0, 1.0], [-1.0, 0.0]]);

    fn rotated(x: [f64; 2], t: f64) -> [f64; 2] {
        // exp(tA) for A = [[0,1],[-1,0]]
        [t.cos() * x[0] + t.sin() * x[1], -t.sin() * x[0] + t.cos() * x[1]]
    }

    #[test]
    fn zero_field_fixes_points() {
        let z = Constant(vec![0.0, 0.0]);
        let y = integrate(&z, &[3.0, -1.0], 1.0, &SolverConfig::default()).unwrap();
        assert_eq!(y, vec![3.0, -1.0]);
    }

    #[test]
    fn constant_field_translates() {
        let c = Constant(vec![2.0]);
        let y = integrate(&c, &[0.0], 0.5, &SolverConfig::default()).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-14);
        let back = integrate(&c, &[0.0], -0.5, &SolverConfig::default()).unwrap();
        assert!((back[0] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn rotation_quarter_turn() {
        let t = std::f64::consts::FRAC_PI_2;
        for cfg in [SolverConfig::default(), SolverConfig::adaptive(1e-12, 1e-14)] {
            let y = integrate(&ROT, &[1.0, 0.0], t, &cfg).unwrap();
            assert!((y[0] - 0.0).abs() < 1e-8 && (y[1] + 1.0).abs() < 1e-8, "{cfg:?}: {y:?}");
        }
    }

    #[test]
    fn trajectory_matches_closed_form() {
        let times: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let traj = trajectory(&ROT, &[0.3, -0.8], &times, &SolverConfig::default()).unwrap();
        for (t, p) in traj.times.iter().zip(&traj.points) {
            let exact = rotated([0.3, -0.8], *t);
            assert!((p[0] - exact[0]).abs() < 1e-8 && (p[1] - exact[1]).abs() < 1e-8);
        }
        let unit = Constant(vec![1.0]);
        let traj = trajectory(&unit, &[0.25], &[0.0, 1.0, 2.0], &SolverConfig::default()).unwrap();
        assert_eq!(traj.points, vec![vec![0.25], vec![1.25], vec![2.25]]);
    }

    #[test]
    fn unsorted_times_rejected() {
        assert!(trajectory(&ROT, &[1.0, 0.0], &[0.0, 1.0, 0.5], &SolverConfig::default()).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            integrate(&ROT, &[1.0], 1.0, &SolverConfig::default()),
            Err(Error::DimensionMismatch { expected: 2, actual: 1 })
        ));
    }

    #[test]
    fn blow_up_is_reported() {
        struct Square;
        impl Field for Square {
            fn dim(&self) -> usize {
                1
            }
            fn eval_into(&self, x: &[f64], out: &mut [f64]) {
                out[0] = x[0] * x[0];
            }
        }
        // z' = z², z(0) = 1 blows up at t = 1.
        let err = integrate(&Square, &[1.0], 3.0, &SolverConfig::fixed(8)).unwrap_err();
        assert!(matches!(err, Error::NonFiniteState { .. }), "{err}");
        let err = integrate(&Square, &[1.0], 3.0, &SolverConfig { max_steps: 500, ..SolverConfig::adaptive(1e-8, 1e-10) })
            .unwrap_err();
        assert!(matches!(err, Error::MaxStepsExceeded { .. } | Error::NonFiniteState { .. }), "{err}");
    }

    #[test]
    fn rk4_observed_order() {
        let exact = rotated([1.0, 0.0], 1.0);
        let errors: Vec<f64> = [8, 16, 32, 64]
            .iter()
            .map(|&n| {
                let y = integrate(&ROT, &[1.0, 0.0], 1.0, &SolverConfig::fixed(n)).unwrap();
                ((y[0] - exact[0]).powi(2) + (y[1] - exact[1]).powi(2)).sqrt()
            })
            .collect();
        for w in errors.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order >= 3.8, "observed order {order} from {errors:?}");
        }
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = SolverConfig { step_count: 0, ..SolverConfig::default() };
        assert!(integrate(&ROT, &[1.0, 0.0], 1.0, &cfg).is_err());
        let cfg = SolverConfig { max_steps: 3, ..SolverConfig::default() };
        assert!(integrate(&ROT, &[1.0, 0.0], 1.0, &cfg).is_err());
    }
}

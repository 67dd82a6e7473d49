//! The series `h(x) = −Σ_{k≥1} x^{1/k−1}/k³` on `(0, 1)`, `L^p` norms by
//! adaptive quadrature, and the maps `g_n = Id + h/n`, which converge to the
//! identity in `L¹` but not in `L^p` for `p > 1`.
//!
//! Writing `u = ln(1/x)`, `h(x) = −e^u·S(u)` with `S(u) = Σ e^{−u/k}/k³`.
//! Since `∫_0^1 x^{1/k−1} dx = k`, `‖h‖_{1,[0,1]} = Σ 1/k² = π²/6`, while near
//! zero `|h(x)| ≈ 1/(x·ln²(1/x))`, so `∫|h|^p` diverges for every `p > 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `Σ_{k≥1} 1/k² = π²/6`.
pub const L1_NORM_ON_UNIT_INTERVAL: f64 = std::f64::consts::PI * std::f64::consts::PI / 6.0;

/// Upper limit on the number of series terms in [`h_eval`].
pub const MAX_TERMS: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesConfig {
    /// Initial number of terms `K`.
    pub truncation: usize,
    /// Largest acceptable certified tail bound.
    pub tail_tolerance: f64,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        Self { truncation: 1000, tail_tolerance: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesValue {
    pub value: f64,
    /// Bound on `|h(x) − value|`.
    pub tail_bound: f64,
    pub terms: usize,
}

fn check_domain(x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::DomainError(x))
    }
}

/// Partial sum of `h` with a certified tail. The tail satisfies
/// `|tail| ≤ (1/x)·Σ_{k>K} 1/k³ ≤ (1/x)/(2K²)` because `x^{1/k−1} ≤ 1/x`;
/// `K` is doubled until the bound meets `tail_tolerance`.
pub fn h_eval(x: f64, sc: &SeriesConfig) -> Result<SeriesValue> {
    check_domain(x)?;
    if sc.truncation < 1 {
        return Err(Error::InvalidParameter("series truncation must be >= 1".into()));
    }
    if !(sc.tail_tolerance > 0.0) {
        return Err(Error::InvalidParameter("tail tolerance must be positive".into()));
    }
    let bound = |k: usize| (1.0 / x) / (2.0 * (k as f64).powi(2));
    let mut terms = sc.truncation.min(MAX_TERMS);
    while bound(terms) > sc.tail_tolerance {
        if terms == MAX_TERMS {
            return Err(Error::TailNotConverged { x, tolerance: sc.tail_tolerance, max_terms: MAX_TERMS });
        }
        terms = (terms * 2).min(MAX_TERMS);
    }
    let ln_x = x.ln();
    // Smallest terms first.
    let sum: f64 = (1..=terms).rev().map(|k| {
        let k = k as f64;
        ((1.0 / k - 1.0) * ln_x).exp() / (k * k * k)
    }).sum();
    Ok(SeriesValue { value: -sum, tail_bound: bound(terms), terms })
}

/// `Σ_{k≥1} e^{−u/k}/k^q` for `q ∈ {2, 3}` and `u ≥ 0`: direct summation of
/// the first `K` terms plus an Euler–Maclaurin tail
/// `∫_K^∞ f − f(K)/2 − f'(K)/12` with `f(s) = e^{−u/s}s^{−q}`. With
/// `K ≥ max(400, 4u)` the neglected remainder is below `1e−14` relative.
fn exp_series(u: f64, q: i32) -> f64 {
    let k_max = (4.0 * u).ceil().max(400.0);
    let n = k_max as usize;
    let f = |s: f64| (-u / s).exp() * s.powi(-q);
    let head: f64 = (1..=n).rev().map(|k| f(k as f64)).sum();
    let a = u / k_max;
    let integral = match q {
        // ∫_K^∞ e^{−u/s}s^{−2} ds = (1 − e^{−a})/u
        2 => {
            if a < 1e-4 {
                (1.0 - a / 2.0 + a * a / 6.0) / k_max
            } else {
                -(-a).exp_m1() / u
            }
        }
        // ∫_K^∞ e^{−u/s}s^{−3} ds = (1 − (1 + a)e^{−a})/u²
        _ => {
            if a < 1e-4 {
                (0.5 - a / 3.0 + a * a / 8.0) / (k_max * k_max)
            } else {
                (1.0 - (1.0 + a) * (-a).exp()) / (u * u)
            }
        }
    };
    let fk = f(k_max);
    let dfk = fk * (u / (k_max * k_max) - f64::from(q) / k_max);
    head + integral - fk / 2.0 - dfk / 12.0
}

/// `h(x)` to near machine precision for any `x ∈ (0, 1]`, including values
/// far below the reach of [`h_eval`].
pub fn h(x: f64) -> Result<f64> {
    if !(x > 0.0 && x <= 1.0) {
        return Err(Error::DomainError(x));
    }
    let u = -x.ln();
    Ok(-exp_series(u, 3) / x)
}

fn h_unchecked(x: f64) -> f64 {
    h(x).unwrap_or(f64::NAN)
}

/// `g_n(x) = x + h(x)/n`.
pub fn gn_eval(n: u64, x: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    Ok(x + h(x)? / n as f64)
}

/// `∫_0^c |h| = Σ_k c^{1/k}/k²`, by integrating the series term by term.
pub fn h_l1_head(c: f64) -> Result<f64> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::DomainError(c));
    }
    Ok(exp_series(-c.ln(), 2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadConfig {
    /// Absolute tolerance per panel.
    pub abs_tol: f64,
    pub max_depth: u32,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self { abs_tol: 1e-8, max_depth: 40 }
    }
}

const ROUNDING_FLOOR: f64 = 1e-13;

/// Smallest panel width, relative to the interval, used when approaching a
/// singular endpoint.
const SINGULAR_FLOOR: f64 = 1e-300;

struct Simpson<'a, F: Fn(f64) -> f64> {
    f: &'a F,
    max_depth: u32,
    unconverged: f64,
}

impl<F: Fn(f64) -> f64> Simpson<'_, F> {
    #[allow(clippy::too_many_arguments)]
    fn recurse(&mut self, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = ((self.f)(lm), (self.f)(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let err = left + right - whole;
        // Below ~1e-13 relative the difference is rounding noise.
        let tol = tol.max(ROUNDING_FLOOR * (left + right).abs());
        if !err.is_finite() || err.abs() <= 15.0 * tol || depth >= self.max_depth || !(m > a && b > m) {
            if err.abs() > 15.0 * tol || !err.is_finite() {
                self.unconverged += err.abs();
            }
            return left + right + err / 15.0;
        }
        self.recurse(a, m, fa, flm, fm, left, tol / 2.0, depth + 1)
            + self.recurse(m, b, fm, frm, fb, right, tol / 2.0, depth + 1)
    }

    fn integrate(&mut self, a: f64, b: f64, tol: f64) -> f64 {
        let m = 0.5 * (a + b);
        let (fa, fm, fb) = ((self.f)(a), (self.f)(m), (self.f)(b));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        self.recurse(a, b, fa, fm, fb, whole, tol, 0)
    }
}

/// `∫_a^b f` for `f ≥ 0` by adaptive Simpson. Panels are laid out
/// geometrically from `a` (breakpoints `a + (b−a)·2^{−j}`) so the integrand
/// may grow like a power of `1/(x − a)`. When `f(a)` is not finite, `a` is
/// treated as singular and never evaluated: panels shrink toward it until
/// the estimated remainder is below tolerance.
pub fn integrate_nonnegative<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, quad: &QuadConfig) -> Result<f64> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidParameter(format!("need finite a < b, got [{a}, {b}]")));
    }
    if !(quad.abs_tol > 0.0) {
        return Err(Error::InvalidParameter("quadrature tolerance must be positive".into()));
    }
    let mut s = Simpson { f: &f, max_depth: quad.max_depth, unconverged: 0.0 };
    let width = b - a;
    let singular = !f(a).is_finite();
    let mut total = 0.0;
    let mut hi = b;
    let mut previous: Option<f64> = None;
    let mut j = 0u32;
    loop {
        j += 1;
        let lo_raw = a + width * 0.5f64.powi(j as i32);
        // Regular endpoint: stop splitting once panels are tiny relative to
        // the distance from `a` covered so far.
        if !singular && (j > 60 || lo_raw <= a) {
            total += s.integrate(a, hi, quad.abs_tol);
            break;
        }
        let lo = lo_raw;
        let panel = s.integrate(lo, hi, quad.abs_tol);
        total += panel;
        if !total.is_finite() {
            return Err(Error::QuadratureNotConverged { a, b, error: f64::INFINITY });
        }
        hi = lo;
        if singular {
            if let Some(prev) = previous {
                // Geometric decay estimate of everything left in [a, lo].
                let ratio = panel / prev;
                if ratio < 1.0 {
                    let remainder = panel * ratio / (1.0 - ratio);
                    if remainder < quad.abs_tol {
                        total += remainder;
                        break;
                    }
                }
            }
            if (lo - a) <= SINGULAR_FLOOR * width.max(1.0) || lo <= a {
                return Err(Error::QuadratureNotConverged { a, b, error: panel });
            }
            previous = Some(panel);
        }
    }
    if !total.is_finite() || s.unconverged > 1e3 * quad.abs_tol {
        return Err(Error::QuadratureNotConverged { a, b, error: s.unconverged });
    }
    Ok(total)
}

/// `(∫_a^b |map|^p)^{1/p}`.
pub fn lp_norm<F: Fn(f64) -> f64>(map: F, p: f64, a: f64, b: f64, quad: &QuadConfig) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("p must be >= 1, got {p}")));
    }
    let integral = integrate_nonnegative(|x| map(x).abs().powf(p), a, b, quad)?;
    Ok(integral.powf(1.0 / p))
}

/// `‖h‖_{p,[a,b]}` for `0 ≤ a < b ≤ 1`. For `p = 1` and `a = 0` the piece
/// `[0, c]` next to the singularity is taken from the term-wise identity
/// [`h_l1_head`]; for `p > 1` and `a = 0` the norm is infinite and the
/// quadrature reports non-convergence.
pub fn h_norm(p: f64, a: f64, b: f64, quad: &QuadConfig) -> Result<f64> {
    if !(0.0 <= a && a < b && b <= 1.0) {
        return Err(Error::InvalidParameter(format!("need 0 <= a < b <= 1, got [{a}, {b}]")));
    }
    if a == 0.0 && p == 1.0 {
        let c = b.min(1e-3);
        let head = h_l1_head(c)?;
        let body = if c < b { integrate_nonnegative(|x| h_unchecked(x).abs(), c, b, quad)? } else { 0.0 };
        return Ok(head + body);
    }
    lp_norm(h_unchecked, p, a, b, quad)
}

/// `‖g_n − Id‖_{p,[a,b]} = ‖h‖_{p,[a,b]}/n`.
pub fn gn_gap(n: u64, p: f64, a: f64, b: f64, quad: &QuadConfig) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    Ok(h_norm(p, a, b, quad)? / n as f64)
}

/// `δ, δ/2, δ/4, …` while above `end`, then `end`.
pub fn halving_ladder(start: f64, end: f64) -> Result<Vec<f64>> {
    if !(start > end && end > 0.0) {
        return Err(Error::InvalidParameter(format!("need start > end > 0, got {start}, {end}")));
    }
    let mut ladder = Vec::new();
    let mut d = start;
    while d > end {
        ladder.push(d);
        d /= 2.0;
    }
    ladder.push(end);
    Ok(ladder)
}

/// `‖h‖_{p,[δ, 1/2]}` for each `δ` of a strictly decreasing list in
/// `(0, 1/2)`.
pub fn divergence_probe(p: f64, deltas: &[f64], quad: &QuadConfig) -> Result<Vec<f64>> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("p must be >= 1, got {p}")));
    }
    if deltas.is_empty() || deltas.iter().any(|&d| !(d > 0.0 && d < 0.5)) {
        return Err(Error::InvalidParameter("every delta must lie in (0, 0.5)".into()));
    }
    if deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("deltas must be strictly decreasing".into()));
    }
    // Integrate each slab [δ_{i+1}, δ_i] once and accumulate.
    let mut integral = integrate_nonnegative(|x| h_unchecked(x).abs().powf(p), deltas[0], 0.5, quad)?;
    let mut out = vec![integral.powf(1.0 / p)];
    for w in deltas.windows(2) {
        integral += integrate_nonnegative(|x| h_unchecked(x).abs().powf(p), w[1], w[0], quad)?;
        out.push(integral.powf(1.0 / p));
    }
    Ok(out)
}

/// A pair `(N, δ)` with `‖g_N − Id‖_{1,[0,1]} < eps` and
/// `‖g_N − Id‖_{p,[δ,1−δ]} ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapWitness {
    pub n: u64,
    pub delta: f64,
    pub eps: f64,
    pub p: f64,
    pub l1_gap: f64,
    pub lp_gap: f64,
}

/// `N` is the least integer with `L¹` gap below `eps`; `δ` runs over
/// `10^{−2}, 10^{−3}, …, 10^{−300}` until the `L^p` gap reaches 1.
pub fn find_gap_witness(eps: f64, p: f64, quad: &QuadConfig) -> Result<GapWitness> {
    if !(eps > 0.0) || !(p > 1.0) {
        return Err(Error::InvalidParameter("need eps > 0 and p > 1".into()));
    }
    let l1 = h_norm(1.0, 0.0, 1.0, quad)?;
    let n = (l1 / eps).floor() as u64 + 1;
    let l1_gap = l1 / n as f64;
    for k in 2..=300 {
        let delta = 10f64.powi(-k);
        let lp_gap = gn_gap(n, p, delta, 1.0 - delta, quad)?;
        if lp_gap >= 1.0 {
            return Ok(GapWitness { n, delta, eps, p, l1_gap, lp_gap });
        }
    }
    Err(Error::InvalidParameter(format!("no delta >= 1e-300 gives an L^{p} gap of 1 at n = {n}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zeta3() -> f64 {
        // Oracle: direct partial sum with integral tail correction.
        let n = 1_000_000;
        let head: f64 = (1..=n).rev().map(|k| 1.0 / (k as f64).powi(3)).sum();
        head + 1.0 / (2.0 * (n as f64).powi(2))
    }

    #[test]
    fn h_eval_examples() {
        let near_one = h_eval(1.0 - 1e-12, &SeriesConfig::default()).unwrap();
        assert!((near_one.value + zeta3()).abs() < 1e-6, "{}", near_one.value);
        assert!((zeta3() - 1.2020569).abs() < 1e-7);

        let one_term = h_eval(0.25, &SeriesConfig { truncation: 1, tail_tolerance: 10.0 }).unwrap();
        assert_eq!(one_term.value, -1.0);
        assert_eq!(one_term.terms, 1);

        let r = h_eval(0.5, &SeriesConfig { truncation: 1000, tail_tolerance: 1.0 }).unwrap();
        assert_eq!(r.terms, 1000);
        assert!(r.tail_bound <= 1e-6);
    }

    #[test]
    fn h_eval_raises_truncation() {
        let r = h_eval(0.01, &SeriesConfig { truncation: 10, tail_tolerance: 1e-8 }).unwrap();
        assert!(r.tail_bound <= 1e-8);
        assert!(r.terms >= 7072);
    }

    #[test]
    fn h_eval_errors() {
        for x in [0.0, 1.0, -0.5, 2.0, f64::NAN] {
            assert!(matches!(h_eval(x, &SeriesConfig::default()), Err(Error::DomainError(_))));
        }
        let tiny = h_eval(1e-12, &SeriesConfig { truncation: 1, tail_tolerance: 1e-12 });
        assert!(matches!(tiny, Err(Error::TailNotConverged { .. })));
    }

    #[test]
    fn fast_h_matches_certified_series() {
        for x in [0.999, 0.9, 0.5, 0.1, 0.01, 1e-3] {
            let certified = h_eval(x, &SeriesConfig { truncation: 1000, tail_tolerance: 1e-10 }).unwrap();
            let fast = h(x).unwrap();
            assert!((fast - certified.value).abs() <= certified.tail_bound + 1e-12 * fast.abs(), "x = {x}");
        }
    }

    #[test]
    fn fast_h_far_from_one() {
        // Oracle: S(u) = Σ e^{−u/k}/k³ summed directly to 10^6 terms, plus
        // the tail ≈ 1/(2·10^12) (its error is O(u/10^18)).
        for x in [1e-20, 1e-100, 1e-300] {
            let u = -f64::ln(x);
            let s: f64 = (1..=1_000_000).rev().map(|k| (-u / k as f64).exp() / (k as f64).powi(3)).sum::<f64>() + 0.5e-12;
            let fast = h(x).unwrap();
            let rel = (fast * x + s).abs() / s;
            assert!(rel < 1e-8, "x = {x}: rel {rel}");
        }
        assert!((h(1.0).unwrap() + zeta3()).abs() < 1e-12);
    }

    #[test]
    fn h_is_negative_and_increasing() {
        let n = 10_000;
        let (lo, hi) = (1e-6, 1.0 - 1e-6);
        let mut prev = f64::NEG_INFINITY;
        for i in 0..n {
            let x = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            let v = h(x).unwrap();
            assert!(v < 0.0);
            assert!(v > prev, "not increasing at x = {x}");
            prev = v;
        }
    }

    #[test]
    fn quadrature_examples() {
        let q = QuadConfig::default();
        for p in [1.0, 2.0, 3.5] {
            assert!((lp_norm(|_| 1.0, p, 0.0, 1.0, &q).unwrap() - 1.0).abs() < 1e-12);
        }
        assert!((lp_norm(|x| x, 1.0, 0.0, 1.0, &q).unwrap() - 0.5).abs() < 1e-12);
        assert!((lp_norm(|x| x, 2.0, 0.0, 1.0, &q).unwrap() - (1.0f64 / 3.0).sqrt()).abs() < 1e-10);
        // Integrable singularity at 0, never evaluated there.
        let v = lp_norm(|x| 1.0 / x.sqrt(), 1.0, 0.0, 1.0, &q).unwrap();
        assert!((v - 2.0).abs() < 1e-6, "{v}");
        // Non-integrable singularity.
        assert!(matches!(
            lp_norm(|x| 1.0 / x, 1.0, 0.0, 1.0, &q),
            Err(Error::QuadratureNotConverged { .. })
        ));
        assert!(lp_norm(|x| x, 1.0, 1.0, 0.0, &q).is_err());
        assert!(lp_norm(|x| x, 0.5, 0.0, 1.0, &q).is_err());
    }

    #[test]
    fn single_terms_integrate_exactly() {
        let q = QuadConfig::default();
        let delta = 1e-6;
        for k in [1.0f64, 5.0, 50.0] {
            let v = integrate_nonnegative(|x| x.powf(1.0 / k - 1.0) / k.powi(3), delta, 1.0, &q).unwrap();
            let exact = (1.0 - delta.powf(1.0 / k)) / (k * k);
            assert!((v - exact).abs() < 1e-7, "k = {k}: {v} vs {exact}");
        }
    }

    /// Term-wise oracle `Σ_k ((1−δ)^{1/k} − δ^{1/k})/k²`, summed directly to
    /// 2·10^6 terms.
    fn l1_oracle(delta: f64) -> f64 {
        let (a, b) = (delta.ln(), (1.0 - delta).ln());
        (1..=2_000_000).rev().map(|k| {
            let k = k as f64;
            ((b / k).exp() - (a / k).exp()) / (k * k)
        }).sum()
    }

    #[test]
    fn l1_norm_matches_term_wise_oracle_and_grows() {
        let q = QuadConfig::default();
        let mut prev = 0.0;
        for delta in [1e-2, 1e-4, 1e-6] {
            let v = h_norm(1.0, delta, 1.0 - delta, &q).unwrap();
            // Oracle truncation error: Σ_{k>K} (ln(1/δ)+δ)/k³ < 1e-11.
            assert!((v - l1_oracle(delta)).abs() < 1e-6, "delta = {delta}");
            assert!(v > prev && v < L1_NORM_ON_UNIT_INTERVAL);
            prev = v;
        }
    }

    #[test]
    fn l1_head_and_full_norm() {
        let q = QuadConfig::default();
        let full = h_norm(1.0, 0.0, 1.0, &q).unwrap();
        assert!((full - L1_NORM_ON_UNIT_INTERVAL).abs() < 1e-7, "{full}");
        // ∫_0^1 |h| by the head formula alone.
        assert!((h_l1_head(1.0).unwrap() - L1_NORM_ON_UNIT_INTERVAL).abs() < 1e-13);
        // Head + quadrature agrees with the oracle for [c, 1].
        let c = 0.01;
        let split = h_l1_head(c).unwrap() + integrate_nonnegative(|x| h(x).unwrap().abs(), c, 1.0, &q).unwrap();
        assert!((split - L1_NORM_ON_UNIT_INTERVAL).abs() < 1e-7);
    }

    #[test]
    fn higher_norms_diverge_at_zero() {
        let q = QuadConfig::default();
        assert!(matches!(h_norm(1.5, 0.0, 0.5, &q), Err(Error::QuadratureNotConverged { .. })));
    }

    #[test]
    fn probe_behaviour() {
        let q = QuadConfig::default();
        let deltas = [1e-2, 1e-4, 1e-6];
        let p1 = divergence_probe(1.0, &deltas, &q).unwrap();
        assert!(p1.windows(2).all(|w| w[1] > w[0]));
        assert!(p1.iter().all(|&v| v < L1_NORM_ON_UNIT_INTERVAL));
        let p15 = divergence_probe(1.5, &deltas, &q).unwrap();
        let p2 = divergence_probe(2.0, &deltas, &q).unwrap();
        assert!(p15.windows(2).all(|w| w[1] > w[0]));
        assert!(p2.windows(2).all(|w| w[1] > w[0]));
        // Growth relative to the first rung is faster for larger p.
        for i in 1..deltas.len() {
            assert!(p2[i] / p2[0] > p15[i] / p15[0]);
            assert!(p15[i] / p15[0] > p1[i] / p1[0]);
        }
        // |h| ≥ 1 pointwise, so the integrand of the larger exponent dominates.
        for x in [1e-6, 1e-3, 0.1, 0.49] {
            let v = h(x).unwrap().abs();
            assert!(v >= 1.0 && v.powf(2.0) >= v.powf(1.5));
        }
        assert!(divergence_probe(1.5, &[1e-4, 1e-2], &q).is_err());
        assert!(divergence_probe(1.5, &[0.7], &q).is_err());
    }

    #[test]
    fn ladder() {
        let l = halving_ladder(1e-2, 1e-6).unwrap();
        assert_eq!(l[0], 1e-2);
        assert_eq!(*l.last().unwrap(), 1e-6);
        assert!(l.windows(2).all(|w| w[1] < w[0]));
        assert_eq!(l.len(), 15);
    }

    #[test]
    fn gap_examples() {
        let q = QuadConfig::default();
        let direct = h_norm(1.0, 0.25, 0.75, &q).unwrap();
        assert_eq!(gn_gap(1, 1.0, 0.25, 0.75, &q).unwrap(), direct);
        // g_n − Id computed through g_n itself agrees with h/n.
        let via_g = lp_norm(|x| gn_eval(3, x).unwrap() - x, 1.0, 0.25, 0.75, &q).unwrap();
        assert!((via_g - direct / 3.0).abs() < 1e-9);
        // L¹ gap on [0,1] falls below eps once n > (π²/6)/eps.
        let eps = 0.05;
        let n = (L1_NORM_ON_UNIT_INTERVAL / eps).floor() as u64 + 1;
        assert!(gn_gap(n, 1.0, 0.0, 1.0, &q).unwrap() < eps);
        assert!(gn_gap(n - 1, 1.0, 0.0, 1.0, &q).unwrap() >= eps);
        let coarse = gn_gap(17, 1.25, 1e-2, 1.0 - 1e-2, &q).unwrap();
        let fine = gn_gap(17, 1.25, 1e-6, 1.0 - 1e-6, &q).unwrap();
        assert!(fine > coarse);
    }

    #[test]
    fn witness_search() {
        let w = find_gap_witness(0.1, 1.25, &QuadConfig::default()).unwrap();
        assert_eq!(w.n, 17);
        assert!(w.l1_gap < 0.1);
        assert!(w.lp_gap >= 1.0);
        let previous = gn_gap(w.n, 1.25, w.delta * 10.0, 1.0 - w.delta * 10.0, &QuadConfig::default()).unwrap();
        assert!(previous < 1.0);
    }
}

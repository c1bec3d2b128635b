//! State-dependent flow costs `c(ρ)`.
//!
//! For a symmetric cost bounded away from zero the threshold form of the
//! optimal rule is kept, but the expected sampling cost of stopping at `±γ`
//! under a standardized gap `Δ` becomes
//! `P(ρ_τ = γ)·ζ_Δ(γ) + P(ρ_τ = −γ)·ζ_Δ(−γ)`, where `ζ_Δ` solves
//! `½ζ″ + (Δ/2)ζ′ = c` with `ζ(0) = ζ′(0) = 0`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::analytics::DesignParams;
use crate::error::{finite, positive, Result, WaldError};
use crate::optimize::{bisect, bracket_max_by_doubling, golden_max, golden_min};
use crate::quadrature::integrate;

/// Relative tolerance of both quadrature levels in [`zeta`].
pub const ZETA_REL_TOL: f64 = 1e-12;

/// Half-width of the region in which symmetry and the lower bound are checked.
const CHECK_RADIUS: f64 = 10.0;
const CHECK_POINTS: usize = 64;
const SADDLE_TOL: f64 = 1e-9;

/// Monotone piecewise-cubic (Fritsch–Carlson) interpolant of `c` against `|z|`,
/// constant beyond the end knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneTable {
    x: Vec<f64>,
    y: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneTable {
    pub fn new(knots: &[(f64, f64)]) -> Result<Self> {
        if knots.len() < 2 {
            return Err(WaldError::param("table", "needs at least two knots"));
        }
        let x: Vec<f64> = knots.iter().map(|k| k.0).collect();
        let y: Vec<f64> = knots.iter().map(|k| k.1).collect();
        if x[0] < 0.0 || x.windows(2).any(|w| !(w[1] > w[0])) || y.iter().any(|v| !v.is_finite()) {
            return Err(WaldError::param(
                "table",
                "knots must have non-negative, strictly increasing |z| and finite values",
            ));
        }
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let d: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut m = vec![0.0; n];
        for i in 1..n - 1 {
            if d[i - 1] * d[i] > 0.0 {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                m[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
            }
        }
        m[0] = end_slope(
            h[0],
            h.get(1).copied().unwrap_or(h[0]),
            d[0],
            d.get(1).copied().unwrap_or(d[0]),
        );
        m[n - 1] = end_slope(
            h[n - 2],
            if n > 2 { h[n - 3] } else { h[n - 2] },
            d[n - 2],
            if n > 2 { d[n - 3] } else { d[n - 2] },
        );
        Ok(Self { x, y, slopes: m })
    }

    pub fn eval(&self, z: f64) -> f64 {
        let u = z.abs();
        let n = self.x.len();
        if u <= self.x[0] {
            return self.y[0];
        }
        if u >= self.x[n - 1] {
            return self.y[n - 1];
        }
        let i = self.x.partition_point(|&k| k <= u) - 1;
        let h = self.x[i + 1] - self.x[i];
        let t = (u - self.x[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.y[i] + h10 * h * self.slopes[i] + h01 * self.y[i + 1] + h11 * h * self.slopes[i + 1]
    }

    pub fn min_value(&self) -> f64 {
        self.y.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// One-sided three-point end slope, limited to keep the interpolant monotone.
fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m.signum() != d0.signum() || d0 == 0.0 {
        0.0
    } else if d0.signum() != d1.signum() && m.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        m
    }
}

#[derive(Clone)]
pub enum CostKind {
    Constant(f64),
    /// `c(z) = Σ_k a_k |z|^k`.
    Polynomial(Vec<f64>),
    Table(MonotoneTable),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for CostKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostKind::Constant(c) => f.debug_tuple("Constant").field(c).finish(),
            CostKind::Polynomial(a) => f.debug_tuple("Polynomial").field(a).finish(),
            CostKind::Table(t) => f.debug_tuple("Table").field(t).finish(),
            CostKind::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CostFunction {
    kind: CostKind,
    scale: f64,
    c_lower: f64,
    symmetric: bool,
}

/// Points `±R·(2{kφ} − 1)` from the golden-ratio sequence.
fn check_points() -> impl Iterator<Item = f64> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    (1..=CHECK_POINTS).map(|k| CHECK_RADIUS * (2.0 * (k as f64 * INV_PHI).fract() - 1.0))
}

impl CostFunction {
    /// Validates the declared lower bound everywhere on the check points and,
    /// when `symmetric` is set, spot-checks `c(z) = c(−z)` there.
    pub fn new(kind: CostKind, c_lower: f64, symmetric: bool) -> Result<Self> {
        positive("c_lower", c_lower)?;
        finite("c_lower", c_lower)?;
        let cost = Self {
            kind,
            scale: 1.0,
            c_lower,
            symmetric,
        };
        for z in std::iter::once(0.0).chain(check_points()) {
            let v = cost.eval(z);
            if !v.is_finite() || v < c_lower * (1.0 - 1e-12) {
                return Err(WaldError::param(
                    "cost",
                    format!("c({z}) = {v} is below the declared bound {c_lower}"),
                ));
            }
            if symmetric {
                let w = cost.eval(-z);
                if (v - w).abs() > 1e-12 * v.abs().max(1.0) {
                    return Err(WaldError::param(
                        "cost",
                        format!("declared symmetric but c({z}) = {v} != c({}) = {w}", -z),
                    ));
                }
            }
        }
        Ok(cost)
    }

    pub fn constant(c: f64) -> Result<Self> {
        Self::new(CostKind::Constant(c), c, true)
    }

    /// Polynomial in `|z|` with `a₀ > 0` and non-negative higher coefficients;
    /// use [`CostFunction::new`] with an explicit bound for other shapes.
    pub fn polynomial(coeffs: Vec<f64>) -> Result<Self> {
        match coeffs.split_first() {
            Some((&a0, rest)) if a0 > 0.0 && rest.iter().all(|&a| a >= 0.0) => {
                Self::new(CostKind::Polynomial(coeffs), a0, true)
            }
            _ => Err(WaldError::param(
                "polynomial",
                "needs a0 > 0 and non-negative higher coefficients for an automatic lower bound",
            )),
        }
    }

    pub fn table(knots: &[(f64, f64)]) -> Result<Self> {
        let t = MonotoneTable::new(knots)?;
        let lower = t.min_value();
        Self::new(CostKind::Table(t), lower, true)
    }

    pub fn custom<F>(f: F, c_lower: f64, symmetric: bool) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::new(CostKind::Custom(Arc::new(f)), c_lower, symmetric)
    }

    /// `k·c(z)`.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        positive("scale", k)?;
        Ok(Self {
            kind: self.kind.clone(),
            scale: self.scale * k,
            c_lower: self.c_lower * k,
            symmetric: self.symmetric,
        })
    }

    pub fn eval(&self, z: f64) -> f64 {
        let raw = match &self.kind {
            CostKind::Constant(c) => *c,
            CostKind::Polynomial(a) => {
                let u = z.abs();
                a.iter().rev().fold(0.0, |acc, &k| acc * u + k)
            }
            CostKind::Table(t) => t.eval(z),
            CostKind::Custom(f) => f(z),
        };
        self.scale * raw
    }

    pub fn c_lower(&self) -> f64 {
        self.c_lower
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn kind(&self) -> &CostKind {
        &self.kind
    }
}

/// `ζ_Δ(x) = 2∫₀ˣ ∫₀ʸ e^{−Δ(y−z)} c(z) dz dy`, by nested adaptive quadrature
/// with signed limits.
pub fn zeta(cost: &CostFunction, delta: f64, x: f64) -> Result<f64> {
    positive("delta", delta)?;
    finite("x", x)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    let err = std::cell::Cell::new(None);
    let inner = |y: f64| -> f64 {
        match integrate(|z| (-delta * (y - z)).exp() * cost.eval(z), 0.0, y, ZETA_REL_TOL, 0.0) {
            Ok(v) => v,
            Err(e) => {
                err.set(Some(e));
                f64::NAN
            }
        }
    };
    let outer = integrate(inner, 0.0, x, ZETA_REL_TOL, 0.0);
    if let Some(e) = err.take() {
        return Err(e);
    }
    Ok(2.0 * outer?)
}

/// Probabilities `(right, wrong)` that the `±γ` rule exits on the side of the
/// better arm or the other one, when `ρ` has drift `Δ/2`.
fn exit_probabilities(gamma: f64, delta: f64) -> (f64, f64) {
    let x = delta * gamma;
    let den = 2.0 * x.sinh();
    (x.exp_m1() / den, -(-x).exp_m1() / den)
}

/// Expected sampling cost `E∫₀^τ c(ρ_t)dt` of the `±γ` rule at standardized gap `Δ`.
pub fn expected_cost(cost: &CostFunction, gamma: f64, delta: f64) -> Result<f64> {
    positive("gamma", gamma)?;
    positive("delta", delta)?;
    let (right, wrong) = exit_probabilities(gamma, delta);
    Ok(right * zeta(cost, delta, gamma)? + wrong * zeta(cost, delta, -gamma)?)
}

/// Frequentist regret of the `±γ` rule at standardized gap `Δ` under cost `c(ρ)`:
/// `((σ₁+σ₀)/2)·Δ·P(wrong) + P(right)·ζ_Δ(γ) + P(wrong)·ζ_Δ(−γ)`.
pub fn general_objective(cost: &CostFunction, sigma1: f64, sigma0: f64, gamma: f64, delta: f64) -> Result<f64> {
    positive("sigma1", sigma1)?;
    positive("sigma0", sigma0)?;
    positive("gamma", gamma)?;
    positive("delta", delta)?;
    let (_, wrong) = exit_probabilities(gamma, delta);
    Ok(0.5 * (sigma1 + sigma0) * delta * wrong + expected_cost(cost, gamma, delta)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralEquilibrium {
    pub gamma_star: f64,
    pub delta_star: f64,
    pub value: f64,
    /// `|∂G/∂γ|` and `|∂G/∂Δ|` at the reported point.
    pub residual_gamma: f64,
    pub residual_delta: f64,
    /// Spread of nature's best response at `γ*` over two starting brackets.
    pub multistart_spread: f64,
}

fn objective(cost: &CostFunction, s1: f64, s0: f64) -> impl Fn(f64, f64) -> f64 + '_ {
    move |g, d| general_objective(cost, s1, s0, g, d).unwrap_or(f64::NAN)
}

fn d_dgamma(g: &impl Fn(f64, f64) -> f64, gamma: f64, delta: f64) -> f64 {
    let h = 1e-4 * gamma;
    (g(gamma + h, delta) - g(gamma - h, delta)) / (2.0 * h)
}

fn d_ddelta(g: &impl Fn(f64, f64) -> f64, gamma: f64, delta: f64) -> f64 {
    let h = 1e-4 * delta;
    (g(gamma, delta + h) - g(gamma, delta - h)) / (2.0 * h)
}

/// Nature's best response to the `±γ` rule from a given starting point.
fn delta_response(g: &impl Fn(f64, f64) -> f64, gamma: f64, start: f64) -> Result<f64> {
    let f = |d: f64| g(gamma, d);
    let (lo, hi) = bracket_max_by_doubling(f, start, 1e4 / gamma)?;
    let (a, b, best) = golden_max(f, lo, hi, 1e-10);
    let w = (b - a).max(1e-5 * best);
    let slope = |d: f64| d_ddelta(g, gamma, d);
    let (l, r) = ((best - w).max(0.5 * best), best + w);
    if slope(l) > 0.0 && slope(r) < 0.0 {
        bisect(|d| -slope(d), l, r, SADDLE_TOL * best)
    } else {
        Ok(best)
    }
}

pub fn general_delta_best_response(cost: &CostFunction, sigma1: f64, sigma0: f64, gamma: f64) -> Result<f64> {
    positive("gamma", gamma)?;
    let g = objective(cost, sigma1, sigma0);
    delta_response(&g, gamma, 1.0 / gamma)
}

/// Saddle point of `min_γ max_Δ G(γ, Δ)` by nested golden-section search
/// (outer over `γ`) with derivative polishing of both coordinates.
pub fn solve_general_equilibrium(cost: &CostFunction, sigma1: f64, sigma0: f64) -> Result<GeneralEquilibrium> {
    positive("sigma1", sigma1)?;
    positive("sigma0", sigma0)?;
    if !cost.is_symmetric() {
        return Err(WaldError::param("cost", "the saddle solver requires a symmetric cost"));
    }
    let g = objective(cost, sigma1, sigma0);
    let reference = DesignParams::new(cost.eval(0.0), sigma1, sigma0)?;
    let eta = reference.eta();
    let upper = |gamma: f64| -> f64 {
        match delta_response(&g, gamma, 1.0 / gamma) {
            Ok(d) => g(gamma, d),
            Err(_) => f64::NAN,
        }
    };

    let (mut lo, mut hi) = (0.05 / eta, 5.0 / eta);
    let mut found = None;
    for _ in 0..6 {
        let (a, b, best) = golden_min(upper, lo, hi, 1e-9);
        let interior = best > lo + 0.01 * (hi - lo) && best < hi - 0.01 * (hi - lo);
        if interior {
            found = Some((a, b, best));
            break;
        }
        lo *= 0.25;
        hi *= 4.0;
    }
    let (a, b, mut gamma) = found.ok_or_else(|| WaldError::Solver {
        solver: "general saddle",
        detail: "outer minimizer stayed on the bracket edge".into(),
        residual: f64::NAN,
    })?;

    // Envelope polish: at the saddle ∂G/∂γ vanishes with Δ at its best response.
    let envelope = |x: f64| match delta_response(&g, x, 1.0 / x) {
        Ok(d) => d_dgamma(&g, x, d),
        Err(_) => f64::NAN,
    };
    let w = (b - a).max(1e-4 * gamma);
    if envelope(gamma - w) < 0.0 && envelope(gamma + w) > 0.0 {
        gamma = bisect(envelope, gamma - w, gamma + w, SADDLE_TOL * gamma)?;
    }

    let delta = delta_response(&g, gamma, 1.0 / gamma)?;
    let alt = delta_response(&g, gamma, 4.0 / gamma)?;
    let value = g(gamma, delta);
    let scale = 0.5 * (sigma1 + sigma0);
    let residual_gamma = d_dgamma(&g, gamma, delta).abs();
    let residual_delta = d_ddelta(&g, gamma, delta).abs();
    if !value.is_finite() || residual_gamma > 1e-5 * scale.max(1.0) || residual_delta > 1e-5 * scale.max(1.0) {
        return Err(WaldError::Solver {
            solver: "general saddle",
            detail: format!("saddle residuals too large at gamma={gamma}, delta={delta}"),
            residual: residual_gamma.max(residual_delta),
        });
    }
    Ok(GeneralEquilibrium {
        gamma_star: gamma,
        delta_star: delta,
        value,
        residual_gamma,
        residual_delta,
        multistart_spread: (alt - delta).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::{solve_equilibrium, standardized_regret};
    use crate::diffusion::{simulate_threshold_process, CrossingRule};
    use crate::rng;
    use crate::summary::{mean, std_error};

    fn constant_zeta(c: f64, delta: f64, x: f64) -> f64 {
        2.0 * c / delta * (x + ((-delta * x).exp() - 1.0) / delta)
    }

    /// Composite Simpson on the swapped-order single integral
    /// `(2/Δ)∫₀ˣ c(z)(1 − e^{−Δ(x−z)}) dz`.
    fn zeta_single(cost: &CostFunction, delta: f64, x: f64) -> f64 {
        let m = 20_000;
        let h = x / m as f64;
        let f = |z: f64| cost.eval(z) * (1.0 - (-delta * (x - z)).exp());
        let mut s = f(0.0) + f(x);
        for k in 1..m {
            s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k as f64 * h);
        }
        2.0 / delta * s * h / 3.0
    }

    #[test]
    fn constant_cost_zeta_closed_form() {
        let cost = CostFunction::constant(1.7).unwrap();
        for &d in &[0.1, 1.0, 2.196, 5.0] {
            for &x in &[-2.0, -0.5, -1e-3, 1e-3, 0.3, 1.0, 3.0] {
                let q = zeta(&cost, d, x).unwrap();
                let exact = constant_zeta(1.7, d, x);
                assert!((q / exact - 1.0).abs() < 1e-8, "d={d} x={x}: {q} vs {exact}");
            }
        }
        assert_eq!(zeta(&cost, 1.0, 0.0).unwrap(), 0.0);
        assert!(zeta(&cost, 0.0, 1.0).is_err());
    }

    #[test]
    fn zeta_matches_single_integral_form() {
        let cost = CostFunction::polynomial(vec![1.0, 0.0, 2.0]).unwrap();
        for &(d, x) in &[(1.0, 0.7), (2.5, -0.6), (0.4, 2.0)] {
            let a = zeta(&cost, d, x).unwrap();
            let b = zeta_single(&cost, d, x);
            assert!((a / b - 1.0).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn zeta_solves_its_ode() {
        let cost = CostFunction::polynomial(vec![0.5, 0.3, 1.0]).unwrap();
        let d = 1.8;
        let h = 1e-3;
        for k in 0..20 {
            let x = -1.5 + 3.0 * k as f64 / 19.0;
            let z = |u: f64| zeta(&cost, d, u).unwrap();
            let (zm, z0, zp) = (z(x - h), z(x), z(x + h));
            let second = (zp - 2.0 * z0 + zm) / (h * h);
            let first = (zp - zm) / (2.0 * h);
            let resid = 0.5 * second + 0.5 * d * first - cost.eval(x);
            assert!(resid.abs() < 1e-4 * cost.eval(x), "x={x}: {resid}");
        }
    }

    #[test]
    fn constant_cost_objective_reduces_to_closed_form() {
        let params = DesignParams::new(1.3, 1.4, 0.6).unwrap();
        let cost = CostFunction::constant(1.3).unwrap();
        for &g in &[0.1, 0.3, 0.5, 0.9, 1.6] {
            for &d in &[0.2, 0.9, 2.0, 3.5, 6.0] {
                let general = general_objective(&cost, 1.4, 0.6, g, d).unwrap();
                let closed = standardized_regret(&params, g, d).unwrap() * params.sigma_sum() / 2.0;
                assert!(
                    (general / closed - 1.0).abs() < 1e-8,
                    "g={g} d={d}: {general} vs {closed}"
                );
                // The cost term alone is c·E[τ] in its hyperbolic form.
                let x = d * g;
                let lemma = 2.0 * 1.3 * g / d * (x.exp() + (-x).exp() - 2.0) / (x.exp() - (-x).exp());
                let term = expected_cost(&cost, g, d).unwrap();
                assert!((term / lemma - 1.0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn objective_limits_and_linearity() {
        let cost = CostFunction::polynomial(vec![1.0, 0.5]).unwrap();
        let v = general_objective(&cost, 1.0, 1.0, 1e-7, 1.3).unwrap();
        assert!((v - 0.5 * 1.3).abs() < 1e-6);
        let doubled = cost.scaled(2.0).unwrap();
        let (g, d) = (0.6, 1.7);
        let base = expected_cost(&cost, g, d).unwrap();
        let twice = expected_cost(&doubled, g, d).unwrap();
        assert!((twice / base - 2.0).abs() < 1e-10);
        let imp = general_objective(&cost, 1.0, 1.0, g, d).unwrap() - base;
        let imp2 = general_objective(&doubled, 1.0, 1.0, g, d).unwrap() - twice;
        assert!((imp - imp2).abs() < 1e-10);
    }

    #[test]
    fn constant_cost_saddle_matches_analytics() {
        for (c, s1, s0) in [(1.0, 1.0, 1.0), (0.5, 2.0, 1.0)] {
            let eq = solve_equilibrium(&DesignParams::new(c, s1, s0).unwrap()).unwrap();
            let ge = solve_general_equilibrium(&CostFunction::constant(c).unwrap(), s1, s0).unwrap();
            assert!((ge.gamma_star - eq.gamma_star).abs() < 1e-5, "{ge:?} vs {eq:?}");
            assert!((ge.delta_star - eq.delta_star).abs() < 1e-5, "{ge:?} vs {eq:?}");
            assert!((ge.value - eq.value).abs() < 1e-6);
            assert!(ge.multistart_spread < 1e-6);
        }
    }

    #[test]
    fn costlier_extremes_stop_earlier() {
        let base = solve_general_equilibrium(&CostFunction::constant(1.0).unwrap(), 1.0, 1.0).unwrap();
        let quad = CostFunction::polynomial(vec![1.0, 0.0, 1.0]).unwrap();
        let ge = solve_general_equilibrium(&quad, 1.0, 1.0).unwrap();
        assert!(
            ge.gamma_star < base.gamma_star,
            "{} vs {}",
            ge.gamma_star,
            base.gamma_star
        );
        // Dense-grid saddle oracle.
        let g = objective(&quad, 1.0, 1.0);
        let gammas: Vec<f64> = (1..=60).map(|k| 0.01 * k as f64 + 0.2).collect();
        let deltas: Vec<f64> = (1..=80).map(|k| 0.05 * k as f64).collect();
        let upper = |gm: f64| deltas.iter().map(|&d| g(gm, d)).fold(f64::MIN, f64::max);
        let grid_gamma = gammas
            .iter()
            .copied()
            .min_by(|a, b| upper(*a).total_cmp(&upper(*b)))
            .unwrap();
        assert!(
            (grid_gamma - ge.gamma_star).abs() <= 0.02,
            "{grid_gamma} vs {}",
            ge.gamma_star
        );
        assert!(grid_gamma < base.gamma_star);
    }

    #[test]
    fn scaled_cost_resolves_consistently() {
        let cost = CostFunction::polynomial(vec![1.0, 0.0, 1.0]).unwrap();
        let ge = solve_general_equilibrium(&cost, 1.0, 1.0).unwrap();
        let k = 3.0;
        let scaled = cost.scaled(k).unwrap();
        let gk = solve_general_equilibrium(&scaled, 1.0, 1.0).unwrap();
        // Coarse grid check of the rescaled saddle.
        let g = objective(&scaled, 1.0, 1.0);
        let upper = |gm: f64| (1..=120).map(|j| g(gm, 0.05 * j as f64)).fold(f64::MIN, f64::max);
        let grid: Vec<f64> = (1..=50).map(|j| 0.01 * j as f64 + 0.1).collect();
        let grid_gamma = grid
            .iter()
            .copied()
            .min_by(|a, b| upper(*a).total_cmp(&upper(*b)))
            .unwrap();
        assert!((grid_gamma - gk.gamma_star).abs() <= 0.02);
        assert!((upper(gk.gamma_star) - gk.value).abs() < 5e-3 * gk.value);
        assert!(gk.gamma_star < ge.gamma_star && gk.value > ge.value);
    }

    #[test]
    fn construction_checks() {
        assert!(CostFunction::constant(0.0).is_err());
        assert!(CostFunction::polynomial(vec![1.0, -0.1]).is_err());
        assert!(CostFunction::custom(|z| 1.0 + 0.1 * z, 0.01, true).is_err());
        assert!(CostFunction::custom(|z| 2.0 + z.sin(), 1.0, false).is_ok());
        assert!(CostFunction::custom(|z| 2.0 + z.cos(), 1.5, true).is_err());
        let asym = CostFunction::custom(|z| 2.0 + 0.5 * z.sin(), 1.0, false).unwrap();
        assert!(solve_general_equilibrium(&asym, 1.0, 1.0).is_err());
    }

    #[test]
    fn monotone_table_interpolation() {
        let t = CostFunction::table(&[(0.0, 1.0), (0.5, 1.2), (1.0, 2.0), (2.0, 2.1)]).unwrap();
        assert_eq!(t.eval(0.5), 1.2);
        assert_eq!(t.eval(-1.0), 2.0);
        assert_eq!(t.eval(7.0), 2.1);
        let mut prev = t.eval(0.0);
        for k in 1..=400 {
            let v = t.eval(k as f64 * 0.005);
            assert!(v >= prev - 1e-15);
            prev = v;
        }
        assert!(MonotoneTable::new(&[(0.0, 1.0)]).is_err());
        assert!(MonotoneTable::new(&[(0.0, 1.0), (0.0, 2.0)]).is_err());
    }

    #[test]
    fn monte_carlo_expected_cost() {
        let cost = CostFunction::polynomial(vec![1.0, 0.0, 1.0]).unwrap();
        let (gamma, delta) = (0.5, 2.0);
        let expected = expected_cost(&cost, gamma, delta).unwrap();
        let dt = 2e-4;
        let totals: Vec<f64> = (0..20_000u64)
            .map(|i| {
                let exit = simulate_threshold_process(
                    0.0,
                    |_| 0.5 * delta,
                    |r| cost.eval(r),
                    gamma,
                    dt,
                    None,
                    CrossingRule::BridgeCorrected,
                    &mut rng::stream(31, i),
                );
                exit.running_cost
            })
            .collect();
        let (m, se) = (mean(&totals), std_error(&totals));
        assert!((m - expected).abs() < 3.0 * se, "{m} ± {se} vs {expected}");
    }
}

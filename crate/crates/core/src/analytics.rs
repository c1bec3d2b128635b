//! Closed-form regret of threshold stopping rules and the equilibrium of the
//! minimax game between the experimenter (choosing a threshold `γ`) and nature
//! (choosing a standardized gap `Δ`).
//!
//! Throughout, `Δ = 2|μ₁ − μ₀| / (σ₁ + σ₀)` is the standardized gap and `γ` is a
//! threshold on `ρ(t) = x₁(t)/σ₁ − x₀(t)/σ₀`. Under the Neyman allocation
//! `ρ(t) = (Δ/2)t + W(t)` for a standard Brownian motion `W`.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{non_negative, positive, Result, WaldError};
use crate::normal;
use crate::optimize::{bisect, bracket_max_by_doubling, golden_max, golden_min};

/// Below this value of `Δγ` the hyperbolic forms switch to their series expansions.
const SERIES_CUTOFF: f64 = 1e-6;
/// Relative tolerance of the one-dimensional best-response solves.
pub const BEST_RESPONSE_TOL: f64 = 1e-10;
/// Maximum allowed `|γ − γ(Δ(γ))|` at a reported equilibrium.
pub const FIXED_POINT_TOL: f64 = 1e-8;
/// Largest standardized gap explored when bracketing nature's best response.
const DELTA_SEARCH_LIMIT: f64 = 1e10;

/// Problem primitives: flow cost `c` and outcome standard deviations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignParams {
    c: f64,
    sigma1: f64,
    sigma0: f64,
}

impl DesignParams {
    pub fn new(c: f64, sigma1: f64, sigma0: f64) -> Result<Self> {
        positive("c", c)?;
        positive("sigma1", sigma1)?;
        positive("sigma0", sigma0)?;
        Ok(Self { c, sigma1, sigma0 })
    }

    /// `c = 1`, `σ₁ = σ₀ = 1`, for which `η = 1`.
    pub fn unit() -> Self {
        Self {
            c: 1.0,
            sigma1: 1.0,
            sigma0: 1.0,
        }
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn sigma1(&self) -> f64 {
        self.sigma1
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    pub fn sigma_sum(&self) -> f64 {
        self.sigma1 + self.sigma0
    }

    /// `η = (2c / (σ₁ + σ₀))^{1/3}`; always recomputed from the primitives.
    pub fn eta(&self) -> f64 {
        (2.0 * self.c / self.sigma_sum()).cbrt()
    }

    /// `Δ = 2·gap / (σ₁ + σ₀)`.
    pub fn standardized_gap(&self, abs_gap: f64) -> f64 {
        2.0 * abs_gap / self.sigma_sum()
    }

    /// Inverse of [`standardized_gap`](Self::standardized_gap).
    pub fn raw_gap(&self, delta: f64) -> f64 {
        0.5 * self.sigma_sum() * delta
    }

    /// Copy with the flow cost replaced.
    pub fn with_cost(&self, c: f64) -> Result<Self> {
        Self::new(c, self.sigma1, self.sigma0)
    }
}

/// Dimensionless equilibrium constants at `η = 1`, computed once by the solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniversalConstants {
    pub gamma0: f64,
    pub delta0: f64,
    pub alpha_star: f64,
    /// `R(γ₀, Δ₀)` at `η = 1`; the minimax regret is `((σ₁+σ₀)/2)·η·r0`.
    pub r0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSolution {
    pub gamma_star: f64,
    pub delta_star: f64,
    pub value: f64,
    pub alpha: f64,
    /// `|γ* − γ(Δ(γ*))|` at termination.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaiSolution {
    pub delta_bar: f64,
    pub value: f64,
}

fn check_gamma(gamma: f64) -> Result<f64> {
    non_negative("gamma", gamma)
}

/// Probability that a threshold rule picks the worse arm:
/// `(1 − e^{−Δγ}) / (e^{Δγ} − e^{−Δγ})`, evaluated as `1 / (1 + e^{Δγ})`.
pub fn misid_prob(gamma: f64, delta: f64) -> Result<f64> {
    check_gamma(gamma)?;
    positive("delta", delta)?;
    let x = delta * gamma;
    if x < SERIES_CUTOFF {
        return Ok(0.5 - 0.25 * x + x * x * x / 48.0);
    }
    Ok(1.0 / (1.0 + x.exp()))
}

/// Expected hitting time of `±γ` by `(Δ/2)t + W(t)`:
/// `(2/Δ²)·Δγ·(e^{Δγ} + e^{−Δγ} − 2)/(e^{Δγ} − e^{−Δγ}) = (2γ/Δ)·tanh(Δγ/2)`,
/// with the driftless limit `γ²`.
pub fn expected_stopping_time(gamma: f64, delta: f64) -> Result<f64> {
    check_gamma(gamma)?;
    non_negative("delta", delta)?;
    let x = delta * gamma;
    if x < SERIES_CUTOFF {
        return Ok(gamma * gamma * (1.0 - x * x / 12.0));
    }
    Ok(2.0 * gamma / delta * (0.5 * x).tanh())
}

/// Frequentist regret of the threshold rule `γ` when `|μ₁ − μ₀| = abs_gap`.
pub fn closed_form_regret(params: &DesignParams, gamma: f64, abs_gap: f64) -> Result<f64> {
    check_gamma(gamma)?;
    non_negative("abs_gap", abs_gap)?;
    let delta = params.standardized_gap(abs_gap);
    if delta == 0.0 {
        return Ok(params.c * gamma * gamma);
    }
    if gamma == 0.0 {
        return Ok(0.5 * abs_gap);
    }
    let implementation = abs_gap * misid_prob(gamma, delta)?;
    Ok(implementation + params.c * expected_stopping_time(gamma, delta)?)
}

/// `R(γ, Δ) = closed_form_regret / ((σ₁+σ₀)/2)`, the game payoff in standardized units.
pub fn standardized_regret(params: &DesignParams, gamma: f64, delta: f64) -> Result<f64> {
    non_negative("delta", delta)?;
    Ok(closed_form_regret(params, gamma, params.raw_gap(delta))? / (0.5 * params.sigma_sum()))
}

/// `∂R/∂Δ` for `γ > 0, Δ > 0`.
fn d_regret_d_delta(eta3: f64, gamma: f64, delta: f64) -> f64 {
    let x = delta * gamma;
    let a = 1.0 / (1.0 + x.exp());
    let th = (0.5 * x).tanh();
    let sech2 = 1.0 - th * th;
    a - x * a * (1.0 - a) + eta3 * (-2.0 * gamma / (delta * delta) * th + gamma * gamma / delta * sech2)
}

/// `∂R/∂γ` for `γ > 0, Δ > 0`.
fn d_regret_d_gamma(eta3: f64, gamma: f64, delta: f64) -> f64 {
    let x = delta * gamma;
    let a = 1.0 / (1.0 + x.exp());
    let th = (0.5 * x).tanh();
    -delta * delta * a * (1.0 - a) + eta3 * (2.0 / delta * th + gamma * (1.0 - th * th))
}

fn r_unchecked(eta3: f64, gamma: f64, delta: f64) -> f64 {
    let x = delta * gamma;
    let a = if x < SERIES_CUTOFF {
        0.5 - 0.25 * x
    } else {
        1.0 / (1.0 + x.exp())
    };
    let tau = if x < SERIES_CUTOFF {
        gamma * gamma * (1.0 - x * x / 12.0)
    } else {
        2.0 * gamma / delta * (0.5 * x).tanh()
    };
    delta * a + eta3 * tau
}

/// Mis-identification probability `α(Δ)` chosen by the experimenter's best response,
/// i.e. the minimizer over `α ∈ (0, 1/2)` of
/// `((σ₁+σ₀)/2)·Δ·α + (2c/Δ²)·(1 − 2α)·ln((1 − α)/α)`.
///
/// The objective is solved through its stationarity condition written in
/// log-odds `x = ln((1 − α)/α)`, which reads `x + sinh x = Δ³ / (4η³)` and has a
/// unique root bracketed by `[0, asinh(Δ³/(4η³))]`.
pub fn alpha_best_response(params: &DesignParams, delta: f64) -> Result<f64> {
    let x = log_odds_best_response(params, delta)?;
    Ok(1.0 / (1.0 + x.exp()))
}

fn log_odds_best_response(params: &DesignParams, delta: f64) -> Result<f64> {
    positive("delta", delta)?;
    let eta3 = 2.0 * params.c / params.sigma_sum();
    let target = delta.powi(3) / (4.0 * eta3);
    let hi = target.asinh();
    if hi == 0.0 {
        return Ok(0.0);
    }
    bisect(|x| x + x.sinh() - target, 0.0, hi, BEST_RESPONSE_TOL * hi * 1e-5)
}

/// Experimenter's best threshold against the two-point prior at gap `Δ`:
/// `γ(Δ) = (1/Δ)·ln((1 − α(Δ))/α(Δ))`.
pub fn gamma_best_response(params: &DesignParams, delta: f64) -> Result<f64> {
    Ok(log_odds_best_response(params, delta)? / delta)
}

/// Nature's best standardized gap against threshold `γ`: `argmax_Δ R(γ, Δ)`.
///
/// Golden-section search on a bracket found by doubling, then the bracket is
/// polished on the sign of `∂R/∂Δ` so the result is accurate well beyond the
/// `sqrt(ε)` floor of a pure comparison search.
pub fn delta_best_response(params: &DesignParams, gamma: f64) -> Result<f64> {
    positive("gamma", gamma)?;
    let eta3 = 2.0 * params.c / params.sigma_sum();
    let objective = |d: f64| r_unchecked(eta3, gamma, d);
    let (lo, hi) = bracket_max_by_doubling(objective, 1.0 / gamma, DELTA_SEARCH_LIMIT)?;
    let lo = lo.max(f64::MIN_POSITIVE);
    let (glo, ghi, best) = golden_max(objective, lo, hi, BEST_RESPONSE_TOL);
    let slope = |d: f64| d_regret_d_delta(eta3, gamma, d);
    let width = (ghi - glo).max(BEST_RESPONSE_TOL * best);
    let (mut a, mut b) = ((glo - width).max(lo), (ghi + width).min(hi));
    if slope(a) <= 0.0 || slope(b) >= 0.0 {
        // Flat objective at the golden bracket edges; fall back to the full bracket.
        a = lo.max(best * 1e-6);
        b = hi;
    }
    match bisect(slope, a, b, 0.0) {
        Ok(d) => Ok(d),
        Err(_) => Ok(best),
    }
}

/// Solves the fixed point `γ = γ(Δ(γ))` by damped alternating best responses,
/// falling back to a nested min–max golden search when the iteration stalls.
fn solve_fixed_point(params: &DesignParams) -> Result<(f64, f64, f64)> {
    const MAX_ITER: usize = 2_000;
    const DAMPING: f64 = 0.5;

    let mut gamma = 1.0 / params.eta();
    let mut best_residual = f64::INFINITY;
    let mut stalled = 0usize;
    for _ in 0..MAX_ITER {
        let delta = delta_best_response(params, gamma)?;
        let response = gamma_best_response(params, delta)?;
        let residual = (response - gamma).abs();
        if residual < FIXED_POINT_TOL * 1e-2 * gamma.max(1.0) {
            let delta = delta_best_response(params, response)?;
            let residual = (gamma_best_response(params, delta)? - response).abs();
            return Ok((response, delta, residual));
        }
        if residual < 0.999 * best_residual {
            best_residual = residual;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled > 25 {
                break;
            }
        }
        gamma = DAMPING * gamma + (1.0 - DAMPING) * response;
    }
    saddle_search(params)
}

/// Direct two-dimensional saddle search: outer golden-section minimization over
/// `γ` of the inner maximum over `Δ`.
fn saddle_search(params: &DesignParams) -> Result<(f64, f64, f64)> {
    let eta3 = 2.0 * params.c / params.sigma_sum();
    let inner = |g: f64| match delta_best_response(params, g) {
        Ok(d) => r_unchecked(eta3, g, d),
        Err(_) => f64::INFINITY,
    };
    let scale = 1.0 / params.eta();
    let (lo, hi, gamma) = golden_min(inner, 1e-3 * scale, 10.0 * scale, BEST_RESPONSE_TOL);
    // Envelope condition: d/dγ max_Δ R = ∂R/∂γ at Δ(γ), which vanishes at the saddle.
    let envelope = |g: f64| match delta_best_response(params, g) {
        Ok(d) => d_regret_d_gamma(eta3, g, d),
        Err(_) => f64::NAN,
    };
    let width = (hi - lo).max(1e-4 * gamma);
    let gamma = bisect(envelope, (lo - width).max(1e-3 * scale), hi + width, 0.0).unwrap_or(gamma);
    let delta = delta_best_response(params, gamma)?;
    let residual = (gamma_best_response(params, delta)? - gamma).abs();
    if residual > FIXED_POINT_TOL {
        return Err(WaldError::Solver {
            solver: "equilibrium saddle search",
            detail: format!("best responses do not compose to a fixed point at gamma={gamma}"),
            residual,
        });
    }
    Ok((gamma, delta, residual))
}

static UNIVERSAL: OnceLock<UniversalConstants> = OnceLock::new();

/// The unit-scale equilibrium, solved on first use and cached.
pub fn universal_constants() -> UniversalConstants {
    *UNIVERSAL.get_or_init(|| {
        let params = DesignParams::unit();
        let (gamma0, delta0, _) = solve_fixed_point(&params).expect("unit-scale equilibrium solve cannot fail");
        UniversalConstants {
            gamma0,
            delta0,
            alpha_star: 1.0 / (1.0 + (gamma0 * delta0).exp()),
            r0: r_unchecked(1.0, gamma0, delta0),
        }
    })
}

/// Equilibrium `(γ*, Δ*, V*, α*)` for the given primitives.
///
/// Solved directly, then checked against the scaling law `(γ₀/η, ηΔ₀)`.
pub fn solve_equilibrium(params: &DesignParams) -> Result<EquilibriumSolution> {
    let (gamma, delta, residual) = solve_fixed_point(params)?;
    if residual > FIXED_POINT_TOL {
        return Err(WaldError::Solver {
            solver: "equilibrium",
            detail: "fixed-point residual above tolerance".into(),
            residual,
        });
    }
    let uc = universal_constants();
    let eta = params.eta();
    let scaling_gap = ((gamma - uc.gamma0 / eta).abs() / gamma).max((delta - eta * uc.delta0).abs() / delta);
    if scaling_gap > 1e-6 {
        return Err(WaldError::Solver {
            solver: "equilibrium",
            detail: "direct solve disagrees with the rescaled unit-scale solution".into(),
            residual: scaling_gap,
        });
    }
    Ok(EquilibriumSolution {
        gamma_star: gamma,
        delta_star: delta,
        value: closed_form_regret(params, gamma, params.raw_gap(delta))?,
        alpha: misid_prob(gamma, delta)?,
        residual,
    })
}

/// Equilibrium obtained purely from the cached constants and `η`.
pub fn scaled_equilibrium(params: &DesignParams) -> EquilibriumSolution {
    let uc = universal_constants();
    let eta = params.eta();
    let gamma = uc.gamma0 / eta;
    let delta = eta * uc.delta0;
    EquilibriumSolution {
        gamma_star: gamma,
        delta_star: delta,
        value: 0.5 * params.sigma_sum() * eta * uc.r0,
        alpha: uc.alpha_star,
        residual: 0.0,
    }
}

/// Regret of the fixed-horizon (unit time) Neyman design:
/// `((σ₁+σ₀)/2)·Δ·Φ(−Δ/2)`.
pub fn bai_regret(params: &DesignParams, abs_gap: f64) -> Result<f64> {
    non_negative("abs_gap", abs_gap)?;
    let delta = params.standardized_gap(abs_gap);
    Ok(abs_gap * normal::cdf(-0.5 * delta))
}

/// Least-favorable gap for best-arm identification: `Δ̄ = 2δ*` with
/// `Φ(−δ*) = δ*·φ(δ*)`.
pub fn solve_bai_equilibrium() -> BaiSolution {
    let stationarity = |d: f64| normal::cdf(-d) - d * normal::pdf(d);
    let half = bisect(stationarity, 0.1, 3.0, 0.0).expect("stationarity root is bracketed");
    let delta_bar = 2.0 * half;
    BaiSolution {
        delta_bar,
        value: delta_bar * normal::cdf(-half),
    }
}

/// `E[τ*] / T_{R*}` as a function of the mis-identification probability.
pub fn efficiency_ratio_at(alpha: f64) -> f64 {
    let z = normal::quantile(1.0 - alpha);
    (1.0 - 2.0 * alpha) / (2.0 * z * z) * ((1.0 - alpha) / alpha).ln()
}

/// Ratio of the adaptive design's expected duration to the fixed duration a
/// non-adaptive design needs for the same regret. Parameter free.
pub fn efficiency_ratio() -> f64 {
    efficiency_ratio_at(universal_constants().alpha_star)
}

/// Duration of a fixed-sample experiment matching the equilibrium regret:
/// `T = 4·(Φ⁻¹(1 − α*))² / Δ*²`.
pub fn fixed_design_duration(params: &DesignParams) -> f64 {
    let eq = scaled_equilibrium(params);
    let z = normal::quantile(1.0 - eq.alpha);
    4.0 * z * z / (eq.delta_star * eq.delta_star)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit() -> DesignParams {
        DesignParams::unit()
    }

    /// The literal textbook expression, used as an independent route.
    fn misid_literal(g: f64, d: f64) -> f64 {
        let x = d * g;
        (1.0 - (-x).exp()) / (x.exp() - (-x).exp())
    }

    fn tau_literal(g: f64, d: f64) -> f64 {
        let x = d * g;
        2.0 / (d * d) * x * (x.exp() + (-x).exp() - 2.0) / (x.exp() - (-x).exp())
    }

    #[test]
    fn params_validation() {
        assert!(DesignParams::new(0.0, 1.0, 1.0).is_err());
        assert!(DesignParams::new(1.0, -1.0, 1.0).is_err());
        assert!(DesignParams::new(1.0, 1.0, f64::NAN).is_err());
        let p = DesignParams::new(3.0, 0.5, 1.0).unwrap();
        assert!((p.eta() - (2.0f64 * 3.0 / 1.5).cbrt()).abs() < 1e-15);
    }

    #[test]
    fn misid_examples() {
        assert!((misid_prob(0.536357, 2.19613).unwrap() - 0.235).abs() < 5e-4);
        assert_eq!(misid_prob(0.0, 1.0).unwrap(), 0.5);
        // (1 − e^{−20})/(e^{20} − e^{−20}) evaluated in 40-digit arithmetic.
        let v = misid_prob(10.0, 2.0).unwrap();
        assert!((v - 2.061_153_618_190_203_6e-9).abs() < 1e-22);
        assert!(misid_prob(-1.0, 1.0).is_err());
        assert!(misid_prob(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn stopping_time_examples() {
        assert!((expected_stopping_time(1.0, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((expected_stopping_time(1.0, 1e-12).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(expected_stopping_time(0.0, 3.0).unwrap(), 0.0);
        // 40-digit evaluation of the hitting-time formula at the literal constants.
        let t = expected_stopping_time(0.536357, 2.19613).unwrap();
        assert!((t - 0.2584).abs() < 1e-4, "{t}");
        assert!(expected_stopping_time(1.0, f64::NAN).is_err());
    }

    #[test]
    fn stable_forms_match_literal_formulas() {
        for &g in &[0.05, 0.3, 0.8, 2.0, 5.0] {
            for &d in &[0.01, 0.5, 2.0, 7.0] {
                let m = misid_prob(g, d).unwrap();
                let t = expected_stopping_time(g, d).unwrap();
                assert!((m - misid_literal(g, d)).abs() < 1e-13 * m.max(1e-300) + 1e-15);
                assert!((t - tau_literal(g, d)).abs() < 1e-9 * t);
            }
        }
    }

    #[test]
    fn regret_limits_are_exact() {
        let p = DesignParams::new(2.5, 0.7, 1.3).unwrap();
        assert_eq!(closed_form_regret(&p, 1.7, 0.0).unwrap(), 2.5 * 1.7 * 1.7);
        assert_eq!(closed_form_regret(&p, 0.0, 0.9).unwrap(), 0.45);
        assert_eq!(closed_form_regret(&unit(), 1.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn regret_at_literal_equilibrium() {
        let v = closed_form_regret(&unit(), 0.536357, 2.19613).unwrap();
        assert!((v - 0.7755).abs() < 1e-4, "{v}");
    }

    #[test]
    fn gamma_response_fixed_point_at_literals() {
        let g = gamma_best_response(&unit(), 2.19613).unwrap();
        assert!((g - 0.536357).abs() < 1e-4, "{g}");
        assert!(gamma_best_response(&unit(), 0.0).is_err());
    }

    #[test]
    fn gamma_response_matches_grid_scan_of_alpha_objective() {
        let p = DesignParams::new(1.7, 0.8, 1.1).unwrap();
        let s = p.sigma_sum();
        for &d in &[0.5, 1.0, 2.19613, 3.5] {
            let obj = |a: f64| 0.5 * s * d * a + 2.0 * p.c() / (d * d) * (1.0 - 2.0 * a) * ((1.0 - a) / a).ln();
            let mut best = (f64::INFINITY, 0.0);
            let n = 200_000;
            for k in 1..n {
                let a = 0.5 * k as f64 / n as f64;
                let v = obj(a);
                if v < best.0 {
                    best = (v, a);
                }
            }
            let a = alpha_best_response(&p, d).unwrap();
            assert!((a - best.1).abs() < 2e-5, "d={d}: {a} vs grid {}", best.1);
            let g = gamma_best_response(&p, d).unwrap();
            assert!((g - ((1.0 - a) / a).ln() / d).abs() < 1e-12);
        }
    }

    #[test]
    fn gamma_response_is_continuous_and_moves() {
        let g0 = gamma_best_response(&unit(), 2.19613).unwrap();
        let mut prev = gamma_best_response(&unit(), 1.0).unwrap();
        for k in 1..=400 {
            let d = 1.0 + k as f64 * 0.01;
            let g = gamma_best_response(&unit(), d).unwrap();
            assert!((g - prev).abs() < 0.01);
            prev = g;
        }
        assert!((gamma_best_response(&unit(), 3.0).unwrap() - g0).abs() > 1e-3);
    }

    #[test]
    fn gamma_response_scales_with_eta() {
        let p = DesignParams::new(4.0, 0.6, 1.4).unwrap();
        let eta = p.eta();
        for &d in &[0.7, 2.0, 4.0] {
            let g = gamma_best_response(&p, eta * d).unwrap();
            let g_unit = gamma_best_response(&unit(), d).unwrap();
            assert!((g - g_unit / eta).abs() < 1e-10 * g);
        }
    }

    #[test]
    fn delta_response_fixed_point_at_literals() {
        let d = delta_best_response(&unit(), 0.536357).unwrap();
        assert!((d - 2.19613).abs() < 1e-3, "{d}");
        assert!(delta_best_response(&unit(), 0.0).is_err());
    }

    #[test]
    fn delta_response_diverges_for_vanishing_threshold() {
        let err = delta_best_response(&unit(), 1e-15).unwrap_err();
        assert!(matches!(err, WaldError::Solver { .. }));
    }

    #[test]
    fn regret_unimodal_in_delta_on_dense_grid() {
        for &g in &[0.1, 0.536357, 1.5] {
            let vals: Vec<f64> = (1..20_000)
                .map(|k| standardized_regret(&unit(), g, k as f64 * 1e-3).unwrap())
                .collect();
            let peak = vals
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            assert!(vals[..peak].windows(2).all(|w| w[1] >= w[0]));
            assert!(vals[peak..].windows(2).all(|w| w[1] <= w[0]));
            let d = delta_best_response(&unit(), g).unwrap();
            assert!((d - (peak + 1) as f64 * 1e-3).abs() <= 1.5e-3);
        }
    }

    #[test]
    fn unit_equilibrium_matches_literals() {
        let eq = solve_equilibrium(&unit()).unwrap();
        assert!((eq.gamma_star - 0.536357).abs() < 1e-4);
        assert!((eq.delta_star - 2.19613).abs() < 1e-3);
        assert!(eq.residual < FIXED_POINT_TOL);
        assert!((eq.alpha - 0.235).abs() < 1e-3);
    }

    #[test]
    fn cost_four_equilibrium_rescales() {
        let p = DesignParams::new(4.0, 1.0, 1.0).unwrap();
        let eq = solve_equilibrium(&p).unwrap();
        let eta = 4f64.cbrt();
        let unit_eq = solve_equilibrium(&unit()).unwrap();
        assert!((eq.gamma_star - unit_eq.gamma_star / eta).abs() < 1e-6);
        assert!((eq.delta_star - unit_eq.delta_star * eta).abs() < 1e-6);
        assert!((eq.gamma_star - 0.33789).abs() < 1e-4);
        assert!((eq.delta_star - 3.48624).abs() < 1e-3);
    }

    #[test]
    fn saddle_inequalities_on_grid() {
        let eq = solve_equilibrium(&unit()).unwrap();
        let v = standardized_regret(&unit(), eq.gamma_star, eq.delta_star).unwrap();
        for k in 0..=9950 {
            let x = 0.05 + k as f64 * 1e-3;
            assert!(standardized_regret(&unit(), eq.gamma_star, x).unwrap() <= v + 1e-12);
            assert!(standardized_regret(&unit(), x, eq.delta_star).unwrap() >= v - 1e-12);
        }
    }

    #[test]
    fn fallback_saddle_search_agrees() {
        let p = DesignParams::new(0.3, 2.0, 0.5).unwrap();
        let (g, d, r) = saddle_search(&p).unwrap();
        let eq = solve_equilibrium(&p).unwrap();
        assert!(r < FIXED_POINT_TOL);
        assert!((g - eq.gamma_star).abs() < 1e-6);
        assert!((d - eq.delta_star).abs() < 1e-5);
    }

    #[test]
    fn bai_examples() {
        assert_eq!(bai_regret(&unit(), 0.0).unwrap(), 0.0);
        assert!(bai_regret(&unit(), 40.0).unwrap() < 1e-80);
        let sol = solve_bai_equilibrium();
        let half = sol.delta_bar / 2.0;
        assert!((normal::cdf(-half) - half * normal::pdf(half)).abs() < 1e-10);
        assert!((sol.delta_bar - 1.5036).abs() < 1e-3);
        assert!((bai_regret(&unit(), sol.delta_bar).unwrap() - 0.340).abs() < 1e-3);
        // Grid oracle for the maximizer of ΔΦ(−Δ/2).
        let best = (1..40_000)
            .map(|k| k as f64 * 1e-4)
            .max_by(|a, b| {
                (a * normal::cdf(-a / 2.0))
                    .partial_cmp(&(b * normal::cdf(-b / 2.0)))
                    .unwrap()
            })
            .unwrap();
        assert!((best - sol.delta_bar).abs() < 2e-4);
        // The two least-favorable priors coincide at η = Δ̄/Δ₀ ≈ 0.685 by this
        // formula; the value 0.484 quoted in the literature is not reproduced.
        let ratio = sol.delta_bar / universal_constants().delta0;
        assert!((ratio - 0.6847).abs() < 1e-3);
    }

    #[test]
    fn efficiency_ratio_and_components() {
        assert!((efficiency_ratio() - 0.6).abs() < 0.005);
        // As α → 1/2 both durations vanish at the same rate; expanding
        // Φ⁻¹(1/2 + ε) ≈ ε√(2π) gives the limit 2/π, not 0.
        let limit = efficiency_ratio_at(0.5 - 1e-5);
        assert!((limit - 2.0 / std::f64::consts::PI).abs() < 1e-6, "{limit}");
        let eq = scaled_equilibrium(&unit());
        let t = expected_stopping_time(eq.gamma_star, eq.delta_star).unwrap();
        let fixed = fixed_design_duration(&unit());
        assert!((t - 0.2585).abs() < 1e-4);
        assert!((fixed - 0.4313).abs() < 1e-4);
        assert!((t / fixed - efficiency_ratio()).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn misid_decreasing_tau_increasing(d in 0.01f64..10.0, g in 0.0f64..5.0, step in 1e-3f64..1.0) {
            prop_assert!(misid_prob(g + step, d).unwrap() < misid_prob(g, d).unwrap());
            prop_assert!(expected_stopping_time(g + step, d).unwrap() > expected_stopping_time(g, d).unwrap());
        }

        #[test]
        fn alpha_invariant_and_scaling(c in 0.05f64..20.0, s1 in 0.1f64..5.0, s0 in 0.1f64..5.0) {
            let p = DesignParams::new(c, s1, s0).unwrap();
            let eq = solve_equilibrium(&p).unwrap();
            let uc = universal_constants();
            prop_assert!((eq.alpha - uc.alpha_star).abs() < 1e-6);
            prop_assert!((eq.gamma_star * p.eta() - uc.gamma0).abs() < 1e-6);
            prop_assert!((eq.delta_star / p.eta() - uc.delta0).abs() < 1e-6);
            let scaled = scaled_equilibrium(&p);
            prop_assert!((scaled.value - eq.value).abs() < 1e-8 * eq.value);
        }
    }
}

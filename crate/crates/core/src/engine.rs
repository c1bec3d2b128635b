//! Discrete-time sequential experiment engine.
//!
//! Observations arrive one at a time at rate `n` per unit of time. Each is
//! allocated by deterministic Neyman tracking, the standardized score
//! difference `ρ_n` is updated in O(1) from running per-arm sums, and the
//! experiment stops at the first decision epoch where `|ρ_n| ≥ γ` (or the
//! horizon is reached). Unknown standard deviations are handled either by a
//! forced-exploration phase or by conjugate-prior plug-in updating.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{universal_constants, DesignParams};
use crate::error::{finite, positive, Result, WaldError};
use crate::rng;
use crate::summary::{RegretSummary, RunRecord};

/// Default safety cap on the number of observations in one run.
pub const DEFAULT_MAX_PERIODS: u64 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Arm {
    Zero,
    One,
}

impl Arm {
    pub fn index(self) -> usize {
        match self {
            Arm::Zero => 0,
            Arm::One => 1,
        }
    }
}

/// Contract for user-supplied outcome distributions. `mean` and `sd` are in
/// raw outcome units and are used for regret accounting and, in known-variance
/// mode, for the working standard deviations.
pub trait OutcomeSampler: Send + Sync {
    fn sample(&self, arm: Arm, rng: &mut dyn RngCore) -> f64;
    fn mean(&self, arm: Arm) -> f64;
    fn sd(&self, arm: Arm) -> f64;
    /// Common centering value for the score statistic.
    fn reference_mean(&self) -> f64 {
        0.5 * (self.mean(Arm::One) + self.mean(Arm::Zero))
    }
}

#[derive(Clone)]
pub enum OutcomeModel {
    /// `Y(0) ~ Bernoulli(p0)`, `Y(1) ~ Bernoulli(p0 + gap/√n)`.
    Bernoulli {
        p0: f64,
        gap: f64,
    },
    /// `Y(a) ~ N(±gap/(2√n), σ_a²)`, arm 1 taking the positive sign.
    Gaussian {
        gap: f64,
        sigma1: f64,
        sigma0: f64,
    },
    Custom(Arc<dyn OutcomeSampler>),
}

impl fmt::Debug for OutcomeModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutcomeModel::Bernoulli { p0, gap } => {
                f.debug_struct("Bernoulli").field("p0", p0).field("gap", gap).finish()
            }
            OutcomeModel::Gaussian { gap, sigma1, sigma0 } => f
                .debug_struct("Gaussian")
                .field("gap", gap)
                .field("sigma1", sigma1)
                .field("sigma0", sigma0)
                .finish(),
            OutcomeModel::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl OutcomeModel {
    pub fn validate(&self, n: u64) -> Result<()> {
        match *self {
            OutcomeModel::Bernoulli { p0, gap } => {
                finite("gap", gap)?;
                let p1 = self.mean(Arm::One, n);
                for (name, p) in [("p0", p0), ("p1", p1)] {
                    if !(p > 0.0 && p < 1.0) {
                        return Err(WaldError::param(name, format!("must lie in (0, 1), got {p}")));
                    }
                }
                Ok(())
            }
            OutcomeModel::Gaussian { gap, sigma1, sigma0 } => {
                finite("gap", gap)?;
                positive("sigma1", sigma1)?;
                positive("sigma0", sigma0).map(drop)
            }
            OutcomeModel::Custom(ref s) => {
                finite("custom mean", s.mean(Arm::One))?;
                finite("custom mean", s.mean(Arm::Zero))?;
                positive("custom sd", s.sd(Arm::One))?;
                positive("custom sd", s.sd(Arm::Zero)).map(drop)
            }
        }
    }

    pub fn mean(&self, arm: Arm, n: u64) -> f64 {
        let root_n = (n as f64).sqrt();
        match (self, arm) {
            (OutcomeModel::Bernoulli { p0, .. }, Arm::Zero) => *p0,
            (OutcomeModel::Bernoulli { p0, gap }, Arm::One) => p0 + gap / root_n,
            (OutcomeModel::Gaussian { gap, .. }, Arm::One) => 0.5 * gap / root_n,
            (OutcomeModel::Gaussian { gap, .. }, Arm::Zero) => -0.5 * gap / root_n,
            (OutcomeModel::Custom(s), a) => s.mean(a),
        }
    }

    pub fn sd(&self, arm: Arm, n: u64) -> f64 {
        match (self, arm) {
            (OutcomeModel::Bernoulli { .. }, a) => {
                let p = self.mean(a, n);
                (p * (1.0 - p)).sqrt()
            }
            (OutcomeModel::Gaussian { sigma1, .. }, Arm::One) => *sigma1,
            (OutcomeModel::Gaussian { sigma0, .. }, Arm::Zero) => *sigma0,
            (OutcomeModel::Custom(s), a) => s.sd(a),
        }
    }

    /// `√n(μ₁ − μ₀)`, the gap on the scale regret is reported in.
    pub fn local_gap(&self, n: u64) -> f64 {
        match self {
            OutcomeModel::Bernoulli { gap, .. } | OutcomeModel::Gaussian { gap, .. } => *gap,
            OutcomeModel::Custom(s) => (n as f64).sqrt() * (s.mean(Arm::One) - s.mean(Arm::Zero)),
        }
    }

    /// Centering used when the variances are treated as known.
    pub fn reference_mean(&self) -> f64 {
        match self {
            OutcomeModel::Bernoulli { p0, .. } => *p0,
            OutcomeModel::Gaussian { .. } => 0.0,
            OutcomeModel::Custom(s) => s.reference_mean(),
        }
    }

    pub fn sample<R: RngCore + ?Sized>(&self, arm: Arm, n: u64, rng: &mut R) -> f64 {
        match self {
            OutcomeModel::Bernoulli { .. } => {
                let p = self.mean(arm, n);
                if rng.random::<f64>() < p {
                    1.0
                } else {
                    0.0
                }
            }
            OutcomeModel::Gaussian { .. } => {
                let z: f64 = rng.sample(StandardNormal);
                self.mean(arm, n) + self.sd(arm, n) * z
            }
            OutcomeModel::Custom(s) => {
                let mut dynrng = DynRng(rng);
                s.sample(arm, &mut dynrng)
            }
        }
    }
}

struct DynRng<'a, R: RngCore + ?Sized>(&'a mut R);

impl<R: RngCore + ?Sized> RngCore for DynRng<'_, R> {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaRule {
    /// `γ*` of the game at `(c, σ̂₁, σ̂₀)`, recomputed whenever `σ̂` changes.
    Equilibrium,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exploration {
    /// `n̄ = max(floor, ⌈fraction·n⌉)`, or `max(floor, ⌈n^exponent⌉)` when an
    /// exponent is given.
    pub fraction: f64,
    pub floor: u64,
    pub exponent: Option<f64>,
}

impl Default for Exploration {
    fn default() -> Self {
        Self {
            fraction: 0.05,
            floor: 50,
            exponent: None,
        }
    }
}

impl Exploration {
    pub fn size(&self, n: u64) -> u64 {
        let scaled = match self.exponent {
            Some(a) => (n as f64).powf(a).ceil() as u64,
            None => (self.fraction * n as f64).ceil() as u64,
        };
        scaled.max(self.floor)
    }

    fn validate(&self) -> Result<()> {
        match self.exponent {
            Some(a) if !(a > 0.0 && a < 1.0) => Err(WaldError::Config(format!(
                "exploration exponent must lie in (0, 1), got {a}"
            ))),
            Some(_) => Ok(()),
            None if self.fraction.is_finite() && self.fraction >= 0.0 && self.fraction <= 1.0 => Ok(()),
            None => Err(WaldError::Config(format!(
                "exploration fraction must lie in [0, 1], got {}",
                self.fraction
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Prior {
    /// Beta(α, β) on each arm's success probability.
    Beta { alpha: f64, beta: f64 },
    /// Inverse-gamma(shape, scale) on each arm's variance, outcomes treated as
    /// Gaussian around the model's reference mean.
    InverseGamma { shape: f64, scale: f64 },
}

impl Prior {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Prior::Beta { alpha, beta } => alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite(),
            Prior::InverseGamma { shape, scale } => {
                shape > 1.0 && scale > 0.0 && shape.is_finite() && scale.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(WaldError::Config(format!("invalid prior hyperparameters {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarianceMode {
    Known {
        sigma1: f64,
        sigma0: f64,
    },
    /// Known variances taken from the outcome model at run time.
    KnownFromModel,
    ForcedExploration(Exploration),
    ConjugatePrior(Prior),
}

impl VarianceMode {
    /// Known-variance mode using the model's true standard deviations.
    pub fn known_from(model: &OutcomeModel, n: u64) -> Self {
        VarianceMode::Known {
            sigma1: model.sd(Arm::One, n),
            sigma0: model.sd(Arm::Zero, n),
        }
    }
}

/// Transform applied to each outcome before it enters the score sums.
#[derive(Clone)]
pub struct Influence(pub Arc<dyn Fn(f64) -> f64 + Send + Sync>);

impl fmt::Debug for Influence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Influence(..)")
    }
}

#[derive(Debug, Clone)]
pub struct DiscreteConfig {
    pub n: u64,
    /// Per-period cost is `c·n^(-3/2)`, so `n` periods cost `c/√n` and the
    /// √n-scaled cost of a run is `c·n_used/n`.
    pub c: f64,
    pub horizon: Option<f64>,
    pub gamma: GammaRule,
    pub variance: VarianceMode,
    pub batch_size: u64,
    pub max_periods: u64,
    pub influence: Option<Influence>,
}

impl DiscreteConfig {
    pub fn new(n: u64, c: f64, variance: VarianceMode) -> Self {
        Self {
            n,
            c,
            horizon: None,
            gamma: GammaRule::Equilibrium,
            variance,
            batch_size: 1,
            max_periods: DEFAULT_MAX_PERIODS,
            influence: None,
        }
    }

    pub fn per_period_cost(&self) -> f64 {
        self.c * (self.n as f64).powf(-1.5)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(WaldError::Config("n must be >= 1".into()));
        }
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(WaldError::Config(format!("c must be positive, got {}", self.c)));
        }
        if self.batch_size == 0 {
            return Err(WaldError::Config("batch_size must be >= 1".into()));
        }
        if self.max_periods == 0 {
            return Err(WaldError::Config("max_periods must be >= 1".into()));
        }
        if let Some(t) = self.horizon {
            if !(t > 0.0) {
                return Err(WaldError::Config(format!("horizon must be positive, got {t}")));
            }
        }
        if let GammaRule::Fixed(g) = self.gamma {
            if !(g >= 0.0) || g.is_infinite() && self.horizon.is_none() {
                return Err(WaldError::Config(format!("invalid fixed gamma {g}")));
            }
        }
        match self.variance {
            VarianceMode::Known { sigma1, sigma0 } => {
                if !(sigma1 >= 0.0 && sigma0 >= 0.0 && sigma1.is_finite() && sigma0.is_finite()) {
                    return Err(WaldError::Config(format!("invalid known sds ({sigma1}, {sigma0})")));
                }
                if sigma1 + sigma0 == 0.0 {
                    return Err(WaldError::Config("both standard deviations are zero".into()));
                }
                Ok(())
            }
            VarianceMode::KnownFromModel => Ok(()),
            VarianceMode::ForcedExploration(e) => e.validate(),
            VarianceMode::ConjugatePrior(p) => p.validate(),
        }
    }

    fn threshold(&self, sigma1: f64, sigma0: f64) -> f64 {
        match self.gamma {
            GammaRule::Fixed(g) => g,
            GammaRule::Equilibrium => {
                // γ* = γ₀/η with η = (2c/(σ₁+σ₀))^(1/3).
                universal_constants().gamma0 * ((sigma1 + sigma0) / (2.0 * self.c)).cbrt()
            }
        }
    }

    fn transform(&self, y: f64) -> f64 {
        match &self.influence {
            Some(h) => (h.0)(y),
            None => y,
        }
    }
}

/// Running state of one experiment. Per-arm sums are of transformed, uncentered
/// outcomes so the centering can be changed without replaying the data.
#[derive(Debug, Clone, PartialEq)]
pub struct EngineState {
    n: u64,
    counts: [u64; 2],
    sums: [f64; 2],
    sq_sums: [f64; 2],
    centering: f64,
    sigma_hat: [f64; 2],
    rho: f64,
}

impl EngineState {
    pub fn new(n: u64, centering: f64, sigma1: f64, sigma0: f64) -> Self {
        Self {
            n,
            counts: [0, 0],
            sums: [0.0, 0.0],
            sq_sums: [0.0, 0.0],
            centering,
            sigma_hat: [sigma0, sigma1],
            rho: 0.0,
        }
    }

    pub fn count(&self, arm: Arm) -> u64 {
        self.counts[arm.index()]
    }

    pub fn sum(&self, arm: Arm) -> f64 {
        self.sums[arm.index()]
    }

    pub fn sq_sum(&self, arm: Arm) -> f64 {
        self.sq_sums[arm.index()]
    }

    pub fn periods(&self) -> u64 {
        self.counts[0] + self.counts[1]
    }

    /// Elapsed time `(q₁n + q₀n)/n`.
    pub fn t(&self) -> f64 {
        self.periods() as f64 / self.n as f64
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn sigma_hat(&self, arm: Arm) -> f64 {
        self.sigma_hat[arm.index()]
    }

    pub fn centering(&self) -> f64 {
        self.centering
    }

    /// Target share of arm 1 under the working standard deviations.
    pub fn target_share(&self) -> f64 {
        self.sigma_hat[1] / (self.sigma_hat[0] + self.sigma_hat[1])
    }

    /// `|q₁n − t·n·σ̂₁/(σ̂₁+σ̂₀)|`, the tracking error in observations.
    pub fn balance_gap(&self) -> f64 {
        (self.counts[1] as f64 - self.periods() as f64 * self.target_share()).abs()
    }

    /// `ρ_n` recomputed from the sums.
    pub fn rho_from_sums(&self) -> f64 {
        let centered = |a: usize| self.sums[a] - self.counts[a] as f64 * self.centering;
        let side = |a: usize| {
            if self.counts[a] == 0 {
                0.0
            } else {
                centered(a) / self.sigma_hat[a]
            }
        };
        (side(1) - side(0)) / (self.n as f64).sqrt()
    }

    pub fn set_sigma_hat(&mut self, sigma1: f64, sigma0: f64) {
        self.sigma_hat = [sigma0, sigma1];
        self.rho = self.rho_from_sums();
    }

    pub fn set_centering(&mut self, m: f64) {
        self.centering = m;
        self.rho = self.rho_from_sums();
    }

    /// Sample standard deviation of one arm (denominator `n_a − 1`).
    pub fn sample_sd(&self, arm: Arm) -> Option<f64> {
        let a = arm.index();
        let q = self.counts[a];
        if q < 2 {
            return None;
        }
        let qf = q as f64;
        let mean = self.sums[a] / qf;
        let ss = (self.sq_sums[a] - qf * mean * mean).max(0.0);
        Some((ss / (qf - 1.0)).sqrt())
    }
}

/// Returns arm 1 iff `q₁(t) ≤ t·σ̂₁/(σ̂₁+σ̂₀)`.
pub fn neyman_tracking_arm(state: &EngineState) -> Result<Arm> {
    let total = state.sigma_hat[0] + state.sigma_hat[1];
    if !(total > 0.0) {
        return Err(WaldError::Config("both working standard deviations are zero".into()));
    }
    let target = state.periods() as f64 * state.sigma_hat[1] / total;
    Ok(if state.counts[1] as f64 <= target {
        Arm::One
    } else {
        Arm::Zero
    })
}

/// Records one (already transformed) outcome and refreshes `ρ_n`.
pub fn update_rho(state: &mut EngineState, arm: Arm, outcome: f64) {
    let a = arm.index();
    state.counts[a] += 1;
    state.sums[a] += outcome;
    state.sq_sums[a] += outcome * outcome;
    let step = (outcome - state.centering) / (state.sigma_hat[a] * (state.n as f64).sqrt());
    state.rho += if a == 1 { step } else { -step };
}

/// Records one outcome and replaces both working standard deviations by their
/// posterior-mean plug-ins.
pub fn conjugate_prior_update(state: &mut EngineState, prior: &Prior, arm: Arm, outcome: f64) {
    let a = arm.index();
    state.counts[a] += 1;
    state.sums[a] += outcome;
    state.sq_sums[a] += outcome * outcome;
    let (s1, s0) = posterior_sds(state, prior);
    state.set_sigma_hat(s1, s0);
}

/// Posterior-mean plug-in standard deviations given the data in `state`.
pub fn posterior_sds(state: &EngineState, prior: &Prior) -> (f64, f64) {
    let sd = |a: usize| match *prior {
        Prior::Beta { alpha, beta } => {
            let p = (alpha + state.sums[a]) / (alpha + beta + state.counts[a] as f64);
            (p * (1.0 - p)).max(0.0).sqrt()
        }
        Prior::InverseGamma { shape, scale } => {
            let q = state.counts[a] as f64;
            let m = state.centering;
            let ss = (state.sq_sums[a] - 2.0 * m * state.sums[a] + q * m * m).max(0.0);
            let shape_post = shape + 0.5 * q;
            let scale_post = scale + 0.5 * ss;
            (scale_post / (shape_post - 1.0)).sqrt()
        }
    };
    (sd(1), sd(0))
}

/// Prior-implied centering for the conjugate mode.
fn prior_centering(prior: &Prior, model: &OutcomeModel) -> f64 {
    match *prior {
        Prior::Beta { alpha, beta } => alpha / (alpha + beta),
        Prior::InverseGamma { .. } => model.reference_mean(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Continue,
    Stop,
}

/// Stop iff `|ρ_n| ≥ γ` or `t ≥ T`. Callers evaluate it only at epoch
/// boundaries.
pub fn should_stop(state: &EngineState, gamma: f64, horizon: Option<f64>) -> StopDecision {
    let at_horizon = horizon.is_some_and(|t| state.periods() as f64 >= t * state.n as f64);
    if state.rho.abs() >= gamma || at_horizon {
        StopDecision::Stop
    } else {
        StopDecision::Continue
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExplorationEstimate {
    pub sigma1: f64,
    pub sigma0: f64,
    pub consumed: u64,
    /// Mean of all exploration outcomes, used as the frozen centering.
    pub pooled_mean: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub tau: f64,
    pub n_used: u64,
    pub chose_one: bool,
    pub q1_frac: f64,
    pub q0_frac: f64,
    /// `√n(max{μ₁−μ₀, 0} − (μ₁−μ₀)δ)`.
    pub implementation_regret: f64,
    /// `c·n_used/n`.
    pub cost: f64,
    pub regret: f64,
    pub rho_final: f64,
    pub gamma_used: f64,
    pub exploration_used: u64,
    pub hit_boundary: bool,
    pub capped: bool,
    /// Largest `|q₁n − t·n·share|` seen at a decision epoch after exploration.
    pub max_balance_gap: f64,
    pub sigma1_hat: f64,
    pub sigma0_hat: f64,
}

impl ExperimentResult {
    pub fn record(&self, local_gap: f64) -> RunRecord {
        RunRecord {
            regret: self.regret,
            tau: self.tau,
            n_used: self.n_used,
            misidentified: (local_gap > 0.0 && !self.chose_one) || (local_gap < 0.0 && self.chose_one),
            capped: self.capped,
        }
    }

    /// True when every decision epoch satisfied `|q₁/t − share| ≤ 1/(n·t)`.
    pub fn fine_balanced(&self) -> bool {
        self.max_balance_gap <= 1.0
    }
}

fn exploration_length(config: &DiscreteConfig, e: &Exploration) -> u64 {
    round_up(e.size(config.n), config.batch_size)
}

fn round_up(x: u64, b: u64) -> u64 {
    x.div_ceil(b) * b
}

/// Alternates 1,0,1,0,… through the exploration budget (extending by whole
/// batches, up to four times the budget, while an arm shows no variation).
fn explore<R: RngCore + ?Sized>(
    state: &mut EngineState,
    config: &DiscreteConfig,
    model: &OutcomeModel,
    e: &Exploration,
    rng: &mut R,
) -> Result<ExplorationEstimate> {
    let base = exploration_length(config, e);
    let limit = 4 * base;
    let extension = round_up(2, config.batch_size);
    let mut target = base;
    loop {
        while state.periods() < target {
            let arm = if state.periods() & 1 == 0 { Arm::One } else { Arm::Zero };
            let y = config.transform(model.sample(arm, config.n, rng));
            update_rho(state, arm, y);
        }
        let (s1, s0) = match (state.sample_sd(Arm::One), state.sample_sd(Arm::Zero)) {
            (Some(s1), Some(s0)) => (s1, s0),
            _ => {
                return Err(WaldError::Estimation(format!(
                    "forced exploration of {target} observations leaves an arm with fewer than 2"
                )))
            }
        };
        if s1 > 0.0 && s0 > 0.0 {
            let consumed = state.periods();
            return Ok(ExplorationEstimate {
                sigma1: s1,
                sigma0: s0,
                consumed,
                pooled_mean: (state.sums[0] + state.sums[1]) / consumed as f64,
            });
        }
        if target >= limit {
            return Err(WaldError::Config(format!(
                "outcomes constant on an arm after {target} exploration draws; stopping rule undefined"
            )));
        }
        target = (target + extension).min(limit);
    }
}

/// Runs the forced-exploration phase on a fresh state and reports the
/// estimated standard deviations.
pub fn forced_exploration_estimate<R: RngCore + ?Sized>(
    config: &DiscreteConfig,
    model: &OutcomeModel,
    rng: &mut R,
) -> Result<ExplorationEstimate> {
    config.validate()?;
    model.validate(config.n)?;
    let e = match config.variance {
        VarianceMode::ForcedExploration(e) => e,
        _ => Exploration::default(),
    };
    let mut state = EngineState::new(config.n, 0.0, 1.0, 1.0);
    explore(&mut state, config, model, &e, rng)
}

pub fn run_experiment<R: RngCore + ?Sized>(
    config: &DiscreteConfig,
    model: &OutcomeModel,
    rng: &mut R,
) -> Result<ExperimentResult> {
    config.validate()?;
    model.validate(config.n)?;
    let n = config.n;
    let variance = match config.variance {
        VarianceMode::KnownFromModel => VarianceMode::known_from(model, n),
        v => v,
    };
    let (mut state, mut gamma, exploration_used) = match variance {
        VarianceMode::KnownFromModel => unreachable!("resolved above"),
        VarianceMode::Known { sigma1, sigma0 } => (
            EngineState::new(n, model.reference_mean(), sigma1, sigma0),
            config.threshold(sigma1, sigma0),
            0,
        ),
        VarianceMode::ConjugatePrior(prior) => {
            let mut s = EngineState::new(n, prior_centering(&prior, model), 1.0, 1.0);
            let (s1, s0) = posterior_sds(&s, &prior);
            s.set_sigma_hat(s1, s0);
            (s, config.threshold(s1, s0), 0)
        }
        VarianceMode::ForcedExploration(e) => {
            let mut s = EngineState::new(n, 0.0, 1.0, 1.0);
            let est = explore(&mut s, config, model, &e, rng)?;
            s.centering = est.pooled_mean;
            s.set_sigma_hat(est.sigma1, est.sigma0);
            (s, config.threshold(est.sigma1, est.sigma0), est.consumed)
        }
    };
    let prior = match config.variance {
        VarianceMode::ConjugatePrior(p) => Some(p),
        _ => None,
    };

    let mut max_balance_gap: f64 = 0.0;
    let mut capped = false;
    loop {
        if state.periods() > 0 {
            max_balance_gap = max_balance_gap.max(state.balance_gap());
        }
        if should_stop(&state, gamma, config.horizon) == StopDecision::Stop {
            break;
        }
        if state.periods() >= config.max_periods {
            capped = true;
            break;
        }
        for _ in 0..config.batch_size {
            let arm = neyman_tracking_arm(&state)?;
            let y = config.transform(model.sample(arm, n, rng));
            match &prior {
                Some(p) => {
                    conjugate_prior_update(&mut state, p, arm, y);
                    gamma = config.threshold(state.sigma_hat[1], state.sigma_hat[0]);
                }
                None => update_rho(&mut state, arm, y),
            }
        }
    }

    let chose_one = state.rho >= 0.0;
    let local_gap = model.local_gap(n);
    let implementation = local_gap.max(0.0) - if chose_one { local_gap } else { 0.0 };
    let periods = state.periods();
    let tau = state.t();
    let cost = config.c * tau;
    let shares = if periods == 0 {
        (0.0, 0.0)
    } else {
        (
            state.counts[1] as f64 / periods as f64,
            state.counts[0] as f64 / periods as f64,
        )
    };
    Ok(ExperimentResult {
        tau,
        n_used: periods,
        chose_one,
        q1_frac: shares.0,
        q0_frac: shares.1,
        implementation_regret: implementation,
        cost,
        regret: implementation + cost,
        rho_final: state.rho,
        gamma_used: gamma,
        exploration_used,
        hit_boundary: state.rho.abs() >= gamma,
        capped,
        max_balance_gap,
        sigma1_hat: state.sigma_hat[1],
        sigma0_hat: state.sigma_hat[0],
    })
}

/// `reps` independent runs in replication order; replication `i` draws from
/// [`rng::stream`]`(master_seed, i)`.
pub fn run_experiments(
    config: &DiscreteConfig,
    model: &OutcomeModel,
    reps: u64,
    master_seed: u64,
) -> Result<Vec<ExperimentResult>> {
    config.validate()?;
    model.validate(config.n)?;
    (0..reps)
        .into_par_iter()
        .map(|i| run_experiment(config, model, &mut rng::stream(master_seed, i)))
        .collect()
}

pub fn estimate_discrete_regret(
    config: &DiscreteConfig,
    model: &OutcomeModel,
    reps: u64,
    master_seed: u64,
) -> Result<RegretSummary> {
    if reps == 0 {
        return Err(WaldError::param("reps", "must be >= 1"));
    }
    let gap = model.local_gap(config.n);
    let records: Vec<RunRecord> = run_experiments(config, model, reps, master_seed)?
        .iter()
        .map(|r| r.record(gap))
        .collect();
    Ok(RegretSummary::from_records(&records))
}

/// Diffusion-limit parameters matching a discrete configuration.
pub fn limit_params(config: &DiscreteConfig, model: &OutcomeModel) -> Result<DesignParams> {
    DesignParams::new(config.c, model.sd(Arm::One, config.n), model.sd(Arm::Zero, config.n))
}

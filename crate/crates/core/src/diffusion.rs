//! Continuous-time Monte Carlo of the threshold rule.
//!
//! Under the Neyman allocation the stopping statistic evolves as
//! `dρ = (μ₁ − μ₀)/(σ₁ + σ₀) dt + dW`. Paths are advanced with Euler–Maruyama
//! steps of size `dt`. By default a crossing of `±γ` is detected only at grid
//! times, which biases `τ` upward by `O(√dt)`; [`CrossingRule::BridgeCorrected`]
//! additionally tests each step for an excursion with the Brownian-bridge
//! crossing probability and reports the crossing at the step midpoint.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::DesignParams;
use crate::error::{finite, non_negative, positive, Result, WaldError};
use crate::rng;
use crate::summary::{RegretSummary, RunRecord};

/// Default Euler step.
pub const DEFAULT_DT: f64 = 1e-3;

/// Bridge crossing probabilities below `exp(-BRIDGE_EXPONENT_CUTOFF)` are skipped.
const BRIDGE_EXPONENT_CUTOFF: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrossingRule {
    #[default]
    GridOnly,
    BridgeCorrected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionSpec {
    pub params: DesignParams,
    pub mu1: f64,
    pub mu0: f64,
    /// Stopping threshold on `ρ`; `f64::INFINITY` means "never stop early" and
    /// requires a horizon.
    pub gamma: f64,
    pub horizon: Option<f64>,
    pub dt: f64,
    pub crossing: CrossingRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathOutcome {
    pub tau: f64,
    pub chose_one: bool,
    pub hit_boundary: bool,
    /// `max{μ₁−μ₀, 0} − (μ₁−μ₀)δ + cτ`.
    pub regret: f64,
    pub implementation_regret: f64,
    pub cost: f64,
}

impl DiffusionSpec {
    pub fn new(params: DesignParams, mu1: f64, mu0: f64, gamma: f64) -> Result<Self> {
        let spec = Self {
            params,
            mu1,
            mu0,
            gamma,
            horizon: None,
            dt: DEFAULT_DT,
            crossing: CrossingRule::GridOnly,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// A spec whose true means sit at `±gap/2`, so `μ₁ − μ₀ = gap`.
    pub fn with_gap(params: DesignParams, gap: f64, gamma: f64) -> Result<Self> {
        Self::new(params, 0.5 * gap, -0.5 * gap, gamma)
    }

    pub fn dt(mut self, dt: f64) -> Result<Self> {
        self.dt = dt;
        self.validate()?;
        Ok(self)
    }

    pub fn horizon(mut self, horizon: f64) -> Result<Self> {
        self.horizon = Some(horizon);
        self.validate()?;
        Ok(self)
    }

    pub fn crossing(mut self, rule: CrossingRule) -> Self {
        self.crossing = rule;
        self
    }

    pub fn drift(&self) -> f64 {
        (self.mu1 - self.mu0) / self.params.sigma_sum()
    }

    pub fn validate(&self) -> Result<()> {
        finite("mu1", self.mu1)?;
        finite("mu0", self.mu0)?;
        positive("dt", self.dt)?;
        if self.gamma.is_nan() || self.gamma < 0.0 {
            return Err(WaldError::param("gamma", format!("must be >= 0, got {}", self.gamma)));
        }
        match self.horizon {
            Some(t) => {
                positive("horizon", t)?;
                let steps = t / self.dt;
                if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
                    return Err(WaldError::param(
                        "horizon",
                        format!("{t} is not a multiple of dt = {}", self.dt),
                    ));
                }
            }
            None if self.gamma.is_infinite() => {
                return Err(WaldError::param("gamma", "an infinite threshold requires a horizon"));
            }
            None => {}
        }
        Ok(())
    }

    fn horizon_steps(&self) -> Option<u64> {
        self.horizon.map(|t| (t / self.dt).round() as u64)
    }
}

impl PathOutcome {
    /// Regret identity recomputed from the decision and stopping time.
    pub fn regret_identity(mu1: f64, mu0: f64, c: f64, chose_one: bool, tau: f64) -> (f64, f64) {
        let gap = mu1 - mu0;
        let implementation = gap.max(0.0) - if chose_one { gap } else { 0.0 };
        (implementation, c * tau)
    }

    pub fn record(&self, gap: f64) -> RunRecord {
        RunRecord {
            regret: self.regret,
            tau: self.tau,
            n_used: 0,
            misidentified: (gap > 0.0 && !self.chose_one) || (gap < 0.0 && self.chose_one),
            capped: false,
        }
    }
}

/// Exit of a scalar process from `(−γ, γ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdExit {
    pub tau: f64,
    /// Value of the process at exit (`±γ` for bridge-detected crossings).
    pub rho_end: f64,
    /// `∫₀^τ c(ρ_t) dt` by the left-point rule.
    pub running_cost: f64,
    pub hit_boundary: bool,
}

/// Simulates `dρ = drift(ρ) dt + dW` from `rho0` until `|ρ| ≥ γ` or
/// `max_steps` steps have elapsed, accumulating `running_cost(ρ) dt`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_threshold_process<R, D, C>(
    rho0: f64,
    drift: D,
    running_cost: C,
    gamma: f64,
    dt: f64,
    max_steps: Option<u64>,
    crossing: CrossingRule,
    rng: &mut R,
) -> ThresholdExit
where
    R: Rng + ?Sized,
    D: Fn(f64) -> f64,
    C: Fn(f64) -> f64,
{
    if rho0.abs() >= gamma {
        return ThresholdExit {
            tau: 0.0,
            rho_end: rho0,
            running_cost: 0.0,
            hit_boundary: true,
        };
    }
    let sqrt_dt = dt.sqrt();
    let bridge = crossing == CrossingRule::BridgeCorrected && gamma.is_finite();
    let mut rho = rho0;
    let mut cost = 0.0;
    let mut k: u64 = 0;
    loop {
        if max_steps.is_some_and(|m| k >= m) {
            return ThresholdExit {
                tau: k as f64 * dt,
                rho_end: rho,
                running_cost: cost,
                hit_boundary: false,
            };
        }
        let z: f64 = rng.sample(StandardNormal);
        let next = rho + drift(rho) * dt + sqrt_dt * z;
        let flow = running_cost(rho);
        if next.abs() >= gamma {
            if bridge {
                return ThresholdExit {
                    tau: (k as f64 + 0.5) * dt,
                    rho_end: gamma.copysign(next),
                    running_cost: cost + 0.5 * flow * dt,
                    hit_boundary: true,
                };
            }
            return ThresholdExit {
                tau: (k + 1) as f64 * dt,
                rho_end: next,
                running_cost: cost + flow * dt,
                hit_boundary: true,
            };
        }
        if bridge {
            let up = 2.0 * (gamma - rho) * (gamma - next) / dt;
            let down = 2.0 * (gamma + rho) * (gamma + next) / dt;
            if up.min(down) < BRIDGE_EXPONENT_CUTOFF {
                let p_up = (-up).exp();
                let p_down = (-down).exp();
                let u: f64 = rng.random();
                if u < p_up + p_down {
                    let side = if u < p_up { 1.0 } else { -1.0 };
                    return ThresholdExit {
                        tau: (k as f64 + 0.5) * dt,
                        rho_end: side * gamma,
                        running_cost: cost + 0.5 * flow * dt,
                        hit_boundary: true,
                    };
                }
            }
        }
        cost += flow * dt;
        rho = next;
        k += 1;
    }
}

/// One path of the threshold rule. The implemented arm is 1 iff `ρ(τ) ≥ 0`.
pub fn simulate_path<R: Rng + ?Sized>(spec: &DiffusionSpec, rng: &mut R) -> Result<PathOutcome> {
    spec.validate()?;
    let drift = spec.drift();
    let exit = simulate_threshold_process(
        0.0,
        |_| drift,
        |_| 0.0,
        spec.gamma,
        spec.dt,
        spec.horizon_steps(),
        spec.crossing,
        rng,
    );
    let chose_one = exit.rho_end >= 0.0;
    let (implementation, cost) = PathOutcome::regret_identity(spec.mu1, spec.mu0, spec.params.c(), chose_one, exit.tau);
    Ok(PathOutcome {
        tau: exit.tau,
        chose_one,
        hit_boundary: exit.hit_boundary,
        regret: implementation + cost,
        implementation_regret: implementation,
        cost,
    })
}

/// All `reps` paths, in replication order. Replication `i` uses
/// [`rng::stream`]`(master_seed, i)`.
pub fn simulate_paths(spec: &DiffusionSpec, reps: u64, master_seed: u64) -> Result<Vec<PathOutcome>> {
    spec.validate()?;
    (0..reps)
        .into_par_iter()
        .map(|i| simulate_path(spec, &mut rng::stream(master_seed, i)))
        .collect()
}

pub fn estimate_regret(spec: &DiffusionSpec, reps: u64, master_seed: u64) -> Result<RegretSummary> {
    if reps == 0 {
        return Err(WaldError::param("reps", "must be >= 1"));
    }
    let gap = spec.mu1 - spec.mu0;
    let records: Vec<RunRecord> = simulate_paths(spec, reps, master_seed)?
        .iter()
        .map(|p| p.record(gap))
        .collect();
    Ok(RegretSummary::from_records(&records))
}

/// Monte Carlo mean of the implementation-only regret at a fixed horizon with no
/// early stopping (best-arm identification), with its standard error.
pub fn fixed_horizon_regret(
    params: DesignParams,
    gap: f64,
    horizon: f64,
    dt: f64,
    reps: u64,
    master_seed: u64,
) -> Result<(f64, f64)> {
    non_negative("horizon", horizon)?;
    let spec = DiffusionSpec {
        params,
        mu1: 0.5 * gap,
        mu0: -0.5 * gap,
        gamma: f64::INFINITY,
        horizon: Some(horizon),
        dt,
        crossing: CrossingRule::GridOnly,
    };
    let paths = simulate_paths(&spec, reps, master_seed)?;
    let values: Vec<f64> = paths.iter().map(|p| p.implementation_regret).collect();
    Ok((crate::summary::mean(&values), crate::summary::std_error(&values)))
}

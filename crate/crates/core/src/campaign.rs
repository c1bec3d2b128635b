//! Monte Carlo campaigns: regret profiles over a gap grid, Bayes regret under
//! the least favorable prior, the adaptivity-gain report and the fixed-horizon
//! (best-arm identification) profile.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{
    bai_regret, closed_form_regret, efficiency_ratio, expected_stopping_time, fixed_design_duration,
    scaled_equilibrium, solve_bai_equilibrium, DesignParams,
};
use crate::diffusion::{self, CrossingRule, DiffusionSpec};
use crate::engine::{self, DiscreteConfig, GammaRule, OutcomeModel};
use crate::error::{Result, WaldError};
use crate::rng;
use crate::summary::{mean, std_error, RegretSummary, RunRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GapUnits {
    /// `μ₁ − μ₀` (for discrete models, `√n(μ₁ − μ₀)`).
    Raw,
    /// `Δ = 2(μ₁ − μ₀)/(σ₁ + σ₀)`.
    Standardized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeedScheme {
    /// Every grid point reuses the master seed (common random numbers).
    #[default]
    Common,
    /// Grid point `k` uses `stream_seed(master, k)` as its master seed.
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiscreteFamily {
    Bernoulli { p0: f64 },
    Gaussian { sigma1: f64, sigma0: f64 },
}

impl DiscreteFamily {
    pub fn model(&self, gap: f64) -> OutcomeModel {
        match *self {
            DiscreteFamily::Bernoulli { p0 } => OutcomeModel::Bernoulli { p0, gap },
            DiscreteFamily::Gaussian { sigma1, sigma0 } => OutcomeModel::Gaussian { gap, sigma1, sigma0 },
        }
    }

    /// Standard deviations at the null (`gap = 0`).
    pub fn reference_sds(&self) -> (f64, f64) {
        match *self {
            DiscreteFamily::Bernoulli { p0 } => {
                let s = (p0 * (1.0 - p0)).sqrt();
                (s, s)
            }
            DiscreteFamily::Gaussian { sigma1, sigma0 } => (sigma1, sigma0),
        }
    }
}

#[derive(Debug, Clone)]
pub enum CampaignMode {
    Diffusion {
        params: DesignParams,
        /// Threshold override; `None` uses the equilibrium `γ*`.
        gamma: Option<f64>,
        dt: f64,
        horizon: Option<f64>,
        crossing: CrossingRule,
    },
    Discrete {
        config: DiscreteConfig,
        family: DiscreteFamily,
    },
}

#[derive(Debug, Clone)]
pub struct CampaignSpec {
    pub mode: CampaignMode,
    pub grid: Vec<f64>,
    pub units: GapUnits,
    pub reps: u64,
    pub master_seed: u64,
    pub seeds: SeedScheme,
}

impl CampaignSpec {
    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(WaldError::Config("reps must be >= 1".into()));
        }
        if self.grid.iter().any(|g| !g.is_finite()) || self.grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(WaldError::Config(
                "gap grid must be finite and strictly increasing".into(),
            ));
        }
        match &self.mode {
            CampaignMode::Diffusion { dt, horizon, gamma, .. } => {
                if !(*dt > 0.0) {
                    return Err(WaldError::Config(format!("dt must be positive, got {dt}")));
                }
                if let Some(g) = gamma {
                    if !(*g >= 0.0) || (g.is_infinite() && horizon.is_none()) {
                        return Err(WaldError::Config(format!("invalid gamma {g}")));
                    }
                }
                Ok(())
            }
            CampaignMode::Discrete { config, .. } => config.validate(),
        }
    }

    /// Diffusion-limit parameters the reference overlays are computed from.
    pub fn reference_params(&self) -> Result<DesignParams> {
        match &self.mode {
            CampaignMode::Diffusion { params, .. } => Ok(*params),
            CampaignMode::Discrete { config, family } => {
                let (s1, s0) = family.reference_sds();
                DesignParams::new(config.c, s1, s0)
            }
        }
    }

    /// Threshold used by the simulated rule (at the reference parameters for
    /// discrete campaigns whose threshold adapts to `σ̂`).
    pub fn reference_gamma(&self) -> Result<f64> {
        let params = self.reference_params()?;
        Ok(match &self.mode {
            CampaignMode::Diffusion { gamma: Some(g), .. } => *g,
            CampaignMode::Discrete { config, .. } => match config.gamma {
                GammaRule::Fixed(g) => g,
                GammaRule::Equilibrium => scaled_equilibrium(&params).gamma_star,
            },
            _ => scaled_equilibrium(&params).gamma_star,
        })
    }

    /// Grid value converted to the raw gap.
    pub fn raw_gap(&self, value: f64) -> Result<f64> {
        Ok(match self.units {
            GapUnits::Raw => value,
            GapUnits::Standardized => self.reference_params()?.raw_gap(value),
        })
    }

    fn point_seed(&self, k: usize) -> u64 {
        match self.seeds {
            SeedScheme::Common => self.master_seed,
            SeedScheme::Independent => rng::stream_seed(self.master_seed, k as u64),
        }
    }

    /// One replication at raw gap `gap`, drawing from `rng`.
    fn run_one<R: Rng + ?Sized>(&self, gap: f64, rng: &mut R) -> Result<RunRecord> {
        match &self.mode {
            CampaignMode::Diffusion {
                params,
                gamma,
                dt,
                horizon,
                crossing,
            } => {
                let g = match gamma {
                    Some(g) => *g,
                    None => scaled_equilibrium(params).gamma_star,
                };
                let spec = DiffusionSpec {
                    params: *params,
                    mu1: 0.5 * gap,
                    mu0: -0.5 * gap,
                    gamma: g,
                    horizon: *horizon,
                    dt: *dt,
                    crossing: *crossing,
                };
                Ok(diffusion::simulate_path(&spec, rng)?.record(gap))
            }
            CampaignMode::Discrete { config, family } => {
                let model = family.model(gap);
                Ok(engine::run_experiment(config, &model, rng)?.record(gap))
            }
        }
    }

    fn check_point(&self, gap: f64) -> Result<()> {
        match &self.mode {
            CampaignMode::Diffusion { .. } => Ok(()),
            CampaignMode::Discrete { config, family } => family.model(gap).validate(config.n),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    /// Grid value in the campaign's units.
    pub gap: f64,
    pub summary: RegretSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceOverlay {
    pub v_star: f64,
    pub gamma_star: f64,
    /// Least favorable gap in the campaign's units.
    pub delta_star: f64,
    /// Closed-form regret of the simulated threshold at each grid value;
    /// `None` when the rule has no finite threshold.
    pub closed_form: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretProfile {
    pub units: GapUnits,
    pub rows: Vec<ProfileRow>,
    pub reference: ReferenceOverlay,
}

impl RegretProfile {
    /// Index of the grid point with the largest mean regret.
    pub fn argmax(&self) -> Option<usize> {
        (0..self.rows.len()).max_by(|&a, &b| {
            self.rows[a]
                .summary
                .mean_regret
                .total_cmp(&self.rows[b].summary.mean_regret)
        })
    }
}

/// Closed-form overlay recomputed from the analytics at every call.
pub fn reference_overlay(spec: &CampaignSpec) -> Result<ReferenceOverlay> {
    let params = spec.reference_params()?;
    let eq = scaled_equilibrium(&params);
    let gamma = spec.reference_gamma()?;
    let closed_form = spec
        .grid
        .iter()
        .map(|&g| {
            let raw = spec.raw_gap(g)?;
            if gamma.is_finite() {
                closed_form_regret(&params, gamma, raw.abs()).map(Some)
            } else {
                Ok(None)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReferenceOverlay {
        v_star: eq.value,
        gamma_star: eq.gamma_star,
        delta_star: match spec.units {
            GapUnits::Raw => params.raw_gap(eq.delta_star),
            GapUnits::Standardized => eq.delta_star,
        },
        closed_form,
    })
}

/// One [`RegretSummary`] per grid point, in grid order. Replication `i` at
/// grid point `k` draws from `stream(point_seed(k), i)`.
pub fn regret_profile(spec: &CampaignSpec) -> Result<RegretProfile> {
    regret_profile_with_progress(spec, |_, _| {})
}

/// [`regret_profile`] calling `progress(done, total)` after each grid point.
pub fn regret_profile_with_progress<P: FnMut(usize, usize)>(
    spec: &CampaignSpec,
    mut progress: P,
) -> Result<RegretProfile> {
    spec.validate()?;
    let mut rows = Vec::with_capacity(spec.grid.len());
    for (k, &g) in spec.grid.iter().enumerate() {
        let gap = spec.raw_gap(g)?;
        spec.check_point(gap)?;
        let seed = spec.point_seed(k);
        let records: Vec<RunRecord> = (0..spec.reps)
            .into_par_iter()
            .map(|i| spec.run_one(gap, &mut rng::stream(seed, i)))
            .collect::<Result<_>>()?;
        rows.push(ProfileRow {
            gap: g,
            summary: RegretSummary::from_records(&records),
        });
        progress(k + 1, spec.grid.len());
    }
    Ok(RegretProfile {
        units: spec.units,
        rows,
        reference: reference_overlay(spec)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LfpReport {
    pub pooled: RegretSummary,
    /// Summaries conditional on the state with arm 1 better (index 0) and arm 0
    /// better (index 1).
    pub per_state: [RegretSummary; 2],
    pub v_star: f64,
    /// Raw gap of the support points.
    pub support_gap: f64,
}

/// Bayes regret under the symmetric two-point least favorable prior. Each
/// replication first draws the state with probability ½ from its own stream.
pub fn lfp_bayes_regret(spec: &CampaignSpec) -> Result<LfpReport> {
    spec.validate()?;
    let params = spec.reference_params()?;
    let eq = scaled_equilibrium(&params);
    let support_gap = params.raw_gap(eq.delta_star);
    spec.check_point(support_gap)?;
    spec.check_point(-support_gap)?;
    let runs: Vec<(bool, RunRecord)> = (0..spec.reps)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(spec.master_seed, i);
            let upper = r.random::<bool>();
            let gap = if upper { support_gap } else { -support_gap };
            spec.run_one(gap, &mut r).map(|rec| (upper, rec))
        })
        .collect::<Result<_>>()?;
    let pooled: Vec<RunRecord> = runs.iter().map(|r| r.1).collect();
    let upper: Vec<RunRecord> = runs.iter().filter(|r| r.0).map(|r| r.1).collect();
    let lower: Vec<RunRecord> = runs.iter().filter(|r| !r.0).map(|r| r.1).collect();
    Ok(LfpReport {
        pooled: RegretSummary::from_records(&pooled),
        per_state: [RegretSummary::from_records(&upper), RegretSummary::from_records(&lower)],
        v_star: eq.value,
        support_gap,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainReport {
    pub mc_expected_tau: f64,
    pub mc_std_error: f64,
    pub formula_expected_tau: f64,
    /// Duration of the fixed design attaining the same regret.
    pub fixed_duration: f64,
    pub ratio: f64,
    pub mc_ratio: f64,
    pub reference_ratio: f64,
}

/// Expected duration of the optimal sequential rule at the least favorable
/// gap, by simulation and by formula, against the matching fixed design.
pub fn adaptivity_gain_report(params: &DesignParams, reps: u64, dt: f64, master_seed: u64) -> Result<GainReport> {
    if reps < 2 {
        return Err(WaldError::Config("reps must be >= 2".into()));
    }
    let eq = scaled_equilibrium(params);
    let spec = DiffusionSpec::with_gap(*params, params.raw_gap(eq.delta_star), eq.gamma_star)?
        .dt(dt)?
        .crossing(CrossingRule::BridgeCorrected);
    let taus: Vec<f64> = diffusion::simulate_paths(&spec, reps, master_seed)?
        .iter()
        .map(|p| p.tau)
        .collect();
    let formula = expected_stopping_time(eq.gamma_star, eq.delta_star)?;
    let fixed = fixed_design_duration(params);
    let mc = mean(&taus);
    Ok(GainReport {
        mc_expected_tau: mc,
        mc_std_error: std_error(&taus),
        formula_expected_tau: formula,
        fixed_duration: fixed,
        ratio: formula / fixed,
        mc_ratio: mc / fixed,
        reference_ratio: efficiency_ratio(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaiRow {
    /// Standardized gap `Δ`.
    pub delta: f64,
    pub mean_regret: f64,
    pub std_error: f64,
    pub closed_form: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaiProfile {
    pub rows: Vec<BaiRow>,
    pub delta_bar: f64,
    pub value: f64,
}

impl BaiProfile {
    pub fn argmax(&self) -> Option<usize> {
        (0..self.rows.len()).max_by(|&a, &b| self.rows[a].mean_regret.total_cmp(&self.rows[b].mean_regret))
    }
}

/// Regret of sampling for the unit horizon and then picking the empirically
/// better arm, over a grid of standardized gaps (common random numbers).
pub fn bai_profile(params: &DesignParams, deltas: &[f64], reps: u64, dt: f64, master_seed: u64) -> Result<BaiProfile> {
    if reps == 0 {
        return Err(WaldError::Config("reps must be >= 1".into()));
    }
    let rows = deltas
        .iter()
        .map(|&d| {
            let gap = params.raw_gap(d);
            let (m, se) = diffusion::fixed_horizon_regret(*params, gap, 1.0, dt, reps, master_seed)?;
            Ok(BaiRow {
                delta: d,
                mean_regret: m,
                std_error: se,
                closed_form: bai_regret(params, gap)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let sol = solve_bai_equilibrium();
    Ok(BaiProfile {
        rows,
        delta_bar: sol.delta_bar,
        value: sol.value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{Exploration, VarianceMode};

    fn diffusion_spec(grid: Vec<f64>, reps: u64) -> CampaignSpec {
        CampaignSpec {
            mode: CampaignMode::Diffusion {
                params: DesignParams::unit(),
                gamma: None,
                dt: 1e-3,
                horizon: None,
                crossing: CrossingRule::BridgeCorrected,
            },
            grid,
            units: GapUnits::Standardized,
            reps,
            master_seed: 7,
            seeds: SeedScheme::Common,
        }
    }

    #[test]
    fn spec_validation() {
        assert!(diffusion_spec(vec![1.0, 1.0], 10).validate().is_err());
        assert!(diffusion_spec(vec![2.0, 1.0], 10).validate().is_err());
        assert!(diffusion_spec(vec![1.0], 0).validate().is_err());
        assert!(diffusion_spec(vec![], 1).validate().is_ok());
    }

    #[test]
    fn diffusion_profile_peaks_at_least_favorable_gap() {
        let grid: Vec<f64> = (1..=12).map(|k| 0.5 * k as f64).collect();
        let p = regret_profile(&diffusion_spec(grid, 20_000)).unwrap();
        let k = p.argmax().unwrap();
        assert!(
            (p.rows[k].gap - p.reference.delta_star).abs() <= 0.5,
            "{}",
            p.rows[k].gap
        );
        for (row, cf) in p.rows.iter().zip(&p.reference.closed_form) {
            let cf = cf.unwrap();
            assert!((row.summary.mean_regret - cf).abs() < 4.0 * row.summary.std_error + 0.01 * cf);
        }
    }

    #[test]
    fn zero_gap_regret_is_cost_only() {
        let p = regret_profile(&diffusion_spec(vec![0.0], 5_000)).unwrap();
        let s = p.rows[0].summary;
        assert!((s.mean_regret - s.mean_tau).abs() < 1e-12);
        assert_eq!(s.misid_rate, 0.0);
    }

    #[test]
    fn lfp_diffusion_matches_value() {
        let r = lfp_bayes_regret(&diffusion_spec(vec![], 40_000)).unwrap();
        assert!(
            (r.pooled.mean_regret - r.v_star).abs() < 3.0 * r.pooled.std_error,
            "{:?}",
            r.pooled
        );
        let [a, b] = r.per_state;
        let joint = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        assert!((a.mean_regret - b.mean_regret).abs() < 3.0 * joint);
        assert_eq!(a.reps + b.reps, 40_000);
    }

    #[test]
    fn bernoulli_profile_is_near_symmetric() {
        let n = 2000;
        let cfg = DiscreteConfig::new(n, 1.0, VarianceMode::ForcedExploration(Exploration::default()));
        let spec = CampaignSpec {
            mode: CampaignMode::Discrete {
                config: cfg,
                family: DiscreteFamily::Bernoulli { p0: 0.4 },
            },
            grid: vec![-1.5, 1.5],
            units: GapUnits::Raw,
            reps: 10_000,
            master_seed: 3,
            seeds: SeedScheme::Independent,
        };
        let p = regret_profile(&spec).unwrap();
        let (a, b) = (p.rows[0].summary, p.rows[1].summary);
        let joint = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        assert!(
            (a.mean_regret - b.mean_regret).abs() < 3.0 * joint,
            "{} vs {}",
            a.mean_regret,
            b.mean_regret
        );
    }

    #[test]
    fn gain_report_components() {
        let params = DesignParams::new(2.0, 1.5, 0.7).unwrap();
        let r = adaptivity_gain_report(&params, 20_000, 1e-3, 5).unwrap();
        assert!((r.ratio - 0.6).abs() < 0.005);
        assert!((r.mc_expected_tau - r.formula_expected_tau).abs() < 3.0 * r.mc_std_error);
        let unit = adaptivity_gain_report(&DesignParams::unit(), 10, 1e-3, 5).unwrap();
        assert!((unit.fixed_duration - 0.4313).abs() < 1e-3);
    }

    #[test]
    fn bai_profile_matches_tail_formula() {
        let p = bai_profile(&DesignParams::unit(), &[1.0, 1.5, 2.0], 20_000, 0.01, 2).unwrap();
        for row in &p.rows {
            assert!((row.mean_regret - row.closed_form).abs() < 3.0 * row.std_error + 1e-3);
        }
    }
}

//! TOML configuration. Every section and key is optional; command-line flags
//! override file values.
//!
//! ```toml
//! # comments are allowed
//! [analytics]
//! c = 1.0
//! sigma1 = 1.0
//! sigma0 = 1.0
//!
//! [diffusion]
//! dt = 1e-3
//! crossing = "bridge-corrected"   # or "grid-only"
//! horizon = 10.0                  # optional cap on diffusion time
//! gamma = 0.5                     # optional threshold override
//!
//! [experiment]
//! n = 1000
//! family = "bernoulli"            # or "gaussian"
//! p0 = 0.4                        # bernoulli baseline
//! sigma1 = 1.0                    # gaussian sds
//! sigma0 = 1.0
//! variance = "explore"            # "known", "explore", "beta" or "inverse-gamma"
//! exploration_fraction = 0.05
//! exploration_floor = 50
//! prior = [1.0, 1.0]              # hyperparameters for the conjugate modes
//! batch_size = 1
//! max_periods = 100000000
//!
//! [campaign]
//! mode = "diffusion"              # or "discrete"
//! grid = [0.0, 0.5, 1.0]          # or grid_start / grid_stop / grid_step
//! units = "standardized"          # or "raw"
//! reps = 10000
//! seed = 0
//! seeds = "common"                # or "independent"
//!
//! [hjb]
//! d_rho = 0.005
//! horizon = 6.0
//! width = 4.0
//! snapshots = 60
//!
//! [cost]
//! kind = "constant"               # "polynomial" or "table"
//! coefficients = [1.0, 0.0, 1.0]  # polynomial in |z|
//! knots = [[0.0, 1.0], [2.0, 3.0]]
//!
//! [output]
//! format = "csv"
//! path = "profile.csv"
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use minimax_wald::{CrossingRule, Format, GapUnits, SeedScheme, WaldError};
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub analytics: AnalyticsSection,
    #[serde(default)]
    pub diffusion: DiffusionSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub campaign: CampaignSection,
    #[serde(default)]
    pub hjb: HjbSection,
    #[serde(default)]
    pub cost: CostSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyticsSection {
    pub c: Option<f64>,
    pub sigma1: Option<f64>,
    pub sigma0: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffusionSection {
    pub dt: Option<f64>,
    pub crossing: Option<CrossingRule>,
    pub horizon: Option<f64>,
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Bernoulli,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarianceChoice {
    Known,
    Explore,
    Beta,
    InverseGamma,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub n: Option<u64>,
    pub family: Option<Family>,
    pub p0: Option<f64>,
    pub sigma1: Option<f64>,
    pub sigma0: Option<f64>,
    pub variance: Option<VarianceChoice>,
    pub exploration_fraction: Option<f64>,
    pub exploration_floor: Option<u64>,
    pub prior: Option<[f64; 2]>,
    pub batch_size: Option<u64>,
    pub max_periods: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Diffusion,
    Discrete,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignSection {
    pub mode: Option<Mode>,
    pub grid: Option<Vec<f64>>,
    pub grid_start: Option<f64>,
    pub grid_stop: Option<f64>,
    pub grid_step: Option<f64>,
    pub units: Option<GapUnits>,
    pub reps: Option<u64>,
    pub seed: Option<u64>,
    pub seeds: Option<SeedScheme>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HjbSection {
    pub d_rho: Option<f64>,
    pub horizon: Option<f64>,
    pub width: Option<f64>,
    pub snapshots: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostChoice {
    Constant,
    Polynomial,
    Table,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSection {
    pub kind: Option<CostChoice>,
    pub coefficients: Option<Vec<f64>>,
    pub knots: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub format: Option<Format>,
    pub path: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, WaldError> {
        let text = fs::read_to_string(path).map_err(|e| WaldError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text).map_err(|e| WaldError::Config(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// Explicit grid, or the inclusive arithmetic range, or the default
    /// `0, 0.5, …, 5`.
    pub fn grid(&self) -> Result<Vec<f64>, WaldError> {
        let c = &self.campaign;
        if let Some(g) = &c.grid {
            if c.grid_start.is_some() || c.grid_stop.is_some() || c.grid_step.is_some() {
                return Err(WaldError::Config(
                    "give either grid or grid_start/grid_stop/grid_step".into(),
                ));
            }
            return Ok(g.clone());
        }
        let start = c.grid_start.unwrap_or(0.0);
        let stop = c.grid_stop.unwrap_or(5.0);
        let step = c.grid_step.unwrap_or(0.5);
        if !(step > 0.0) || !(stop >= start) {
            return Err(WaldError::Config(format!(
                "invalid grid range {start}..{stop} step {step}"
            )));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize;
        Ok((0..=count).map(|k| start + k as f64 * step).collect())
    }
}

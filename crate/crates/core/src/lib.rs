//! Minimax-regret design of costly sequential two-arm experiments.
//!
//! The optimal design samples arms in Neyman proportions, stops once the
//! standardized score difference `ρ` leaves `[−γ*, γ*]`, and implements the arm
//! favored by the sign of `ρ`. This crate computes the equilibrium constants,
//! simulates the rule in continuous and discrete time, extends it to
//! state-dependent flow costs, and cross-checks the value function by solving
//! the associated obstacle problem on a grid.

// `!(x > 0.0)` deliberately rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod campaign;
pub mod cost;
pub mod diffusion;
pub mod emit;
pub mod engine;
pub mod error;
pub mod hjb;
pub mod normal;
pub mod optimize;
pub mod quadrature;
pub mod rng;
pub mod summary;

pub use analytics::{BaiSolution, DesignParams, EquilibriumSolution, UniversalConstants};
pub use campaign::{CampaignMode, CampaignSpec, DiscreteFamily, GapUnits, RegretProfile, SeedScheme};
pub use cost::{CostFunction, GeneralEquilibrium};
pub use diffusion::{CrossingRule, DiffusionSpec, PathOutcome};
pub use emit::{Format, Metadata};
pub use engine::{
    Arm, DiscreteConfig, EngineState, ExperimentResult, GammaRule, OutcomeModel, OutcomeSampler, VarianceMode,
};
pub use error::{Result, WaldError};
pub use hjb::{HjbGrid, HjbSolution};
pub use summary::{Quantiles, RegretSummary, RunRecord};

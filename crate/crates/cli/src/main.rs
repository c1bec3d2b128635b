#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use minimax_wald::analytics::{scaled_equilibrium, solve_bai_equilibrium, solve_equilibrium};
use minimax_wald::campaign::{adaptivity_gain_report, bai_profile, lfp_bayes_regret, regret_profile_with_progress};
use minimax_wald::cost::solve_general_equilibrium;
use minimax_wald::emit::{self, write_csv_table};
use minimax_wald::engine::{Exploration, Prior};
use minimax_wald::hjb::solve_hjb_with_snapshots;
use minimax_wald::{
    CampaignMode, CampaignSpec, CostFunction, CrossingRule, DesignParams, DiscreteConfig, DiscreteFamily, Format,
    GammaRule, GapUnits, HjbGrid, Metadata, SeedScheme, VarianceMode, WaldError,
};

use config::{CostChoice, Family, FileConfig, Mode, VarianceChoice};

#[derive(Parser)]
#[command(name = "mmwald", version, about = "Minimax-regret sequential experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Print the equilibrium threshold, gap, value and mis-identification rate.
    Equilibrium,
    /// Fixed-horizon regret profile and its least favorable gap.
    Bai,
    /// Monte Carlo regret profile over a gap grid.
    Profile,
    /// Bayes regret under the two-point least favorable prior.
    Lfp,
    /// Expected duration of the sequential rule against the fixed design.
    Gain,
    /// Solve the obstacle problem for the value function and stopping boundary.
    Hjb,
    /// Equilibrium under a state-dependent flow cost.
    GeneralCost,
}

#[derive(Args)]
struct Flags {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    reps: Option<u64>,
    /// Population size; selects the discrete engine unless a mode is set.
    #[arg(long, global = true)]
    n: Option<u64>,
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Threshold override for simulated rules.
    #[arg(long, global = true)]
    gamma: Option<f64>,
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum)]
    mode: Option<Mode>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

/// File values with flags applied on top.
struct Settings {
    file: FileConfig,
    flags: Flags,
}

impl Settings {
    fn params(&self) -> Result<DesignParams, WaldError> {
        let a = &self.file.analytics;
        DesignParams::new(a.c.unwrap_or(1.0), a.sigma1.unwrap_or(1.0), a.sigma0.unwrap_or(1.0))
    }

    fn seed(&self) -> u64 {
        self.flags.seed.or(self.file.campaign.seed).unwrap_or(0)
    }

    fn reps(&self) -> u64 {
        self.flags.reps.or(self.file.campaign.reps).unwrap_or(10_000)
    }

    fn dt(&self) -> f64 {
        self.flags.dt.or(self.file.diffusion.dt).unwrap_or(1e-3)
    }

    fn gamma(&self) -> Option<f64> {
        self.flags.gamma.or(self.file.diffusion.gamma)
    }

    fn format(&self) -> Format {
        match self.flags.format {
            Some(FormatArg::Csv) => Format::Csv,
            Some(FormatArg::Json) => Format::Json,
            None => self.file.output.format.unwrap_or_default(),
        }
    }

    fn out(&self) -> Option<PathBuf> {
        self.flags.out.clone().or_else(|| self.file.output.path.clone())
    }

    fn mode(&self) -> Mode {
        self.flags
            .mode
            .or(self.file.campaign.mode)
            .unwrap_or(if self.flags.n.is_some() {
                Mode::Discrete
            } else {
                Mode::Diffusion
            })
    }

    fn family(&self) -> DiscreteFamily {
        let e = &self.file.experiment;
        match e.family.unwrap_or(Family::Bernoulli) {
            Family::Bernoulli => DiscreteFamily::Bernoulli {
                p0: e.p0.unwrap_or(0.4),
            },
            Family::Gaussian => DiscreteFamily::Gaussian {
                sigma1: e.sigma1.unwrap_or(1.0),
                sigma0: e.sigma0.unwrap_or(1.0),
            },
        }
    }

    fn discrete_config(&self) -> Result<DiscreteConfig, WaldError> {
        let e = &self.file.experiment;
        let n = self.flags.n.or(e.n).unwrap_or(1000);
        let prior = e.prior.unwrap_or([1.0, 1.0]);
        let variance = match e.variance.unwrap_or(VarianceChoice::Explore) {
            VarianceChoice::Known => VarianceMode::KnownFromModel,
            VarianceChoice::Explore => {
                let d = Exploration::default();
                VarianceMode::ForcedExploration(Exploration {
                    fraction: e.exploration_fraction.unwrap_or(d.fraction),
                    floor: e.exploration_floor.unwrap_or(d.floor),
                    exponent: None,
                })
            }
            VarianceChoice::Beta => VarianceMode::ConjugatePrior(Prior::Beta {
                alpha: prior[0],
                beta: prior[1],
            }),
            VarianceChoice::InverseGamma => VarianceMode::ConjugatePrior(Prior::InverseGamma {
                shape: prior[0],
                scale: prior[1],
            }),
        };
        let mut config = DiscreteConfig::new(n, self.params()?.c(), variance);
        if let Some(g) = self.gamma() {
            config.gamma = GammaRule::Fixed(g);
        }
        if let Some(b) = e.batch_size {
            config.batch_size = b;
        }
        if let Some(m) = e.max_periods {
            config.max_periods = m;
        }
        config.horizon = self.file.diffusion.horizon;
        config.validate()?;
        Ok(config)
    }

    fn campaign(&self, grid: Vec<f64>) -> Result<CampaignSpec, WaldError> {
        let mode = match self.mode() {
            Mode::Diffusion => CampaignMode::Diffusion {
                params: self.params()?,
                gamma: self.gamma(),
                dt: self.dt(),
                horizon: self.file.diffusion.horizon,
                crossing: self.file.diffusion.crossing.unwrap_or(CrossingRule::BridgeCorrected),
            },
            Mode::Discrete => CampaignMode::Discrete {
                config: self.discrete_config()?,
                family: self.family(),
            },
        };
        let default_units = match self.mode() {
            Mode::Diffusion => GapUnits::Standardized,
            Mode::Discrete => GapUnits::Raw,
        };
        let spec = CampaignSpec {
            mode,
            grid,
            units: self.file.campaign.units.unwrap_or(default_units),
            reps: self.reps(),
            master_seed: self.seed(),
            seeds: self.file.campaign.seeds.unwrap_or(SeedScheme::Common),
        };
        spec.validate()?;
        Ok(spec)
    }

    fn cost(&self) -> Result<CostFunction, WaldError> {
        let c = &self.file.cost;
        match c.kind.unwrap_or(CostChoice::Constant) {
            CostChoice::Constant => CostFunction::constant(self.params()?.c()),
            CostChoice::Polynomial => CostFunction::polynomial(
                c.coefficients
                    .clone()
                    .ok_or_else(|| WaldError::Config("polynomial cost needs coefficients".into()))?,
            ),
            CostChoice::Table => {
                let knots: Vec<(f64, f64)> = c
                    .knots
                    .as_ref()
                    .ok_or_else(|| WaldError::Config("table cost needs knots".into()))?
                    .iter()
                    .map(|k| (k[0], k[1]))
                    .collect();
                CostFunction::table(&knots)
            }
        }
    }
}

fn exit_code(e: &WaldError) -> u8 {
    match e {
        WaldError::Parameter { .. } | WaldError::Config(_) | WaldError::Estimation(_) => 2,
        WaldError::Solver { .. } | WaldError::Numerical { .. } => 3,
        WaldError::Io { .. } => 4,
    }
}

fn deliver(bytes: &[u8], out: Option<&Path>) -> Result<(), WaldError> {
    match out {
        Some(path) => {
            emit::write_file(path, bytes)?;
            eprintln!("wrote {}", path.display());
            Ok(())
        }
        None => std::io::stdout().write_all(bytes).map_err(|e| WaldError::Io {
            path: "<stdout>".into(),
            message: e.to_string(),
        }),
    }
}

/// One-row CSV or a JSON object with metadata, for scalar reports.
fn deliver_record(s: &Settings, spec: serde_json::Value, names: &[&str], values: &[f64]) -> Result<(), WaldError> {
    let bytes = match s.format() {
        Format::Csv => {
            let mut buf = Vec::new();
            write_csv_table(&mut buf, names, [values.to_vec()])?;
            buf
        }
        Format::Json => {
            let result: serde_json::Map<String, serde_json::Value> = names
                .iter()
                .zip(values)
                .map(|(k, v)| (k.to_string(), json!(v)))
                .collect();
            emit::to_json(&json!({ "metadata": Metadata::new(s.seed(), spec), "result": result }))?
        }
    };
    deliver(&bytes, s.out().as_deref())
}

fn run(command: Command, s: &Settings) -> Result<(), WaldError> {
    let started = Instant::now();
    match command {
        Command::Equilibrium => {
            let params = s.params()?;
            let eq = solve_equilibrium(&params)?;
            eprintln!(
                "gamma* = {:.6}  delta* = {:.6}  V* = {:.6}  alpha* = {:.6}",
                eq.gamma_star, eq.delta_star, eq.value, eq.alpha
            );
            deliver_record(
                s,
                json!({ "params": params }),
                &["gamma_star", "delta_star", "v_star", "alpha_star", "eta", "residual"],
                &[
                    eq.gamma_star,
                    eq.delta_star,
                    eq.value,
                    eq.alpha,
                    params.eta(),
                    eq.residual,
                ],
            )?;
        }
        Command::Bai => {
            let params = s.params()?;
            let grid = s.file.grid()?;
            eprintln!("bai: {} gaps x {} reps", grid.len(), s.reps());
            let profile = bai_profile(&params, &grid, s.reps(), s.dt(), s.seed())?;
            let sol = solve_bai_equilibrium();
            if let Some(k) = profile.argmax() {
                eprintln!(
                    "bai: simulated peak at {} (least favorable {:.6})",
                    profile.rows[k].delta, sol.delta_bar
                );
            }
            let bytes = match s.format() {
                Format::Csv => {
                    let mut buf = Vec::new();
                    let rows = profile
                        .rows
                        .iter()
                        .map(|r| vec![r.delta, r.mean_regret, r.std_error, r.closed_form]);
                    write_csv_table(&mut buf, &["delta", "mean_regret", "se", "closed_form"], rows)?;
                    buf
                }
                Format::Json => emit::to_json(&json!({
                    "metadata": Metadata::new(s.seed(), json!({ "params": params, "grid": grid, "reps": s.reps(), "dt": s.dt() })),
                    "rows": profile.rows,
                    "delta_bar": profile.delta_bar,
                    "value": profile.value,
                }))?,
            };
            deliver(&bytes, s.out().as_deref())?;
        }
        Command::Profile => {
            let spec = s.campaign(s.file.grid()?)?;
            eprintln!("profile: {} grid points x {} reps", spec.grid.len(), spec.reps);
            let profile = regret_profile_with_progress(&spec, |done, total| eprintln!("profile: {done}/{total}"))?;
            let metadata = Metadata::for_campaign(&spec);
            match s.out() {
                Some(path) => {
                    emit::emit_profile(&profile, &metadata, s.format(), &path)?;
                    eprintln!("wrote {}", path.display());
                }
                None => {
                    let bytes = match s.format() {
                        Format::Csv => emit::profile_csv(&profile)?,
                        Format::Json => emit::to_json(&emit::profile_document(&profile, &metadata))?,
                    };
                    deliver(&bytes, None)?;
                }
            }
        }
        Command::Lfp => {
            let spec = s.campaign(Vec::new())?;
            eprintln!("lfp: {} reps", spec.reps);
            let r = lfp_bayes_regret(&spec)?;
            eprintln!(
                "lfp: Bayes regret {:.6} +/- {:.6}, V* = {:.6}",
                r.pooled.mean_regret, r.pooled.std_error, r.v_star
            );
            let bytes = match s.format() {
                Format::Csv => emit::labeled_summary_csv(
                    &[
                        ("pooled".into(), r.pooled),
                        ("upper".into(), r.per_state[0]),
                        ("lower".into(), r.per_state[1]),
                    ],
                    r.v_star,
                )?,
                Format::Json => emit::to_json(&json!({
                    "metadata": Metadata::for_campaign(&spec),
                    "report": r,
                }))?,
            };
            deliver(&bytes, s.out().as_deref())?;
        }
        Command::Gain => {
            let params = s.params()?;
            eprintln!("gain: {} paths", s.reps());
            let r = adaptivity_gain_report(&params, s.reps(), s.dt(), s.seed())?;
            deliver_record(
                s,
                json!({ "params": params, "reps": s.reps(), "dt": s.dt() }),
                &[
                    "mc_expected_tau",
                    "mc_std_error",
                    "formula_expected_tau",
                    "fixed_duration",
                    "ratio",
                    "mc_ratio",
                    "reference_ratio",
                ],
                &[
                    r.mc_expected_tau,
                    r.mc_std_error,
                    r.formula_expected_tau,
                    r.fixed_duration,
                    r.ratio,
                    r.mc_ratio,
                    r.reference_ratio,
                ],
            )?;
        }
        Command::Hjb => {
            let params = s.params()?;
            let h = &s.file.hjb;
            let grid = HjbGrid::for_params(
                &params,
                h.d_rho.unwrap_or(5e-3),
                h.horizon.unwrap_or(6.0),
                h.width.unwrap_or(4.0),
            )?;
            eprintln!("hjb: {} x {} grid", grid.n_rho, grid.n_t);
            let sol = solve_hjb_with_snapshots(&grid, h.snapshots.unwrap_or(60))?;
            let eq = scaled_equilibrium(&params);
            eprintln!(
                "hjb: V(0,0) = {:.6} (closed form {:.6}), boundary {:.6} (gamma* {:.6})",
                sol.value_at_origin(),
                eq.value,
                sol.boundary_at_zero(),
                eq.gamma_star
            );
            let bytes = match s.format() {
                Format::Csv => {
                    let mut buf = Vec::new();
                    let rows = sol
                        .boundary_times
                        .iter()
                        .zip(&sol.boundary_curve)
                        .map(|(&t, &b)| vec![t, b]);
                    write_csv_table(&mut buf, &["t", "boundary"], rows)?;
                    buf
                }
                Format::Json => emit::to_json(&json!({
                    "metadata": Metadata::new(s.seed(), json!({ "params": params, "grid": grid })),
                    "value_at_origin": sol.value_at_origin(),
                    "boundary_at_zero": sol.boundary_at_zero(),
                    "v_star": eq.value,
                    "gamma_star": eq.gamma_star,
                    "boundary_times": sol.boundary_times,
                    "boundary_curve": sol.boundary_curve,
                }))?,
            };
            deliver(&bytes, s.out().as_deref())?;
        }
        Command::GeneralCost => {
            let params = s.params()?;
            let cost = s.cost()?;
            let g = solve_general_equilibrium(&cost, params.sigma1(), params.sigma0())?;
            let flat = scaled_equilibrium(&params);
            eprintln!(
                "general-cost: gamma* = {:.6}, delta* = {:.6} (constant cost: {:.6}, {:.6})",
                g.gamma_star, g.delta_star, flat.gamma_star, flat.delta_star
            );
            deliver_record(
                s,
                json!({ "params": params, "cost": format!("{:?}", cost.kind()) }),
                &[
                    "gamma_star",
                    "delta_star",
                    "value",
                    "residual_gamma",
                    "residual_delta",
                    "constant_cost_gamma_star",
                    "constant_cost_delta_star",
                ],
                &[
                    g.gamma_star,
                    g.delta_star,
                    g.value,
                    g.residual_gamma,
                    g.residual_delta,
                    flat.gamma_star,
                    flat.delta_star,
                ],
            )?;
        }
    }
    eprintln!("done in {:.2?}", started.elapsed());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let file = match &cli.flags.config {
        Some(path) => match FileConfig::load(path) {
            Ok(f) => f,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(exit_code(&e));
            }
        },
        None => FileConfig::default(),
    };
    if let Some(threads) = cli.flags.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let settings = Settings { file, flags: cli.flags };
    match run(cli.command, &settings) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_classes_map_to_exit_codes() {
        assert_eq!(exit_code(&WaldError::Config("x".into())), 2);
        assert_eq!(
            exit_code(&WaldError::Solver {
                solver: "s",
                detail: String::new(),
                residual: 1.0
            }),
            3
        );
        assert_eq!(
            exit_code(&WaldError::Numerical {
                context: "q",
                achieved: 1.0,
                target: 0.0
            }),
            3
        );
        assert_eq!(
            exit_code(&WaldError::Io {
                path: "p".into(),
                message: String::new()
            }),
            4
        );
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}

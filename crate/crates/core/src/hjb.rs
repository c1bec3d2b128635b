//! Obstacle-problem solver for the stopping value in the belief coordinate.
//!
//! Under the least favorable prior the posterior that arm 1 is better is
//! approximately `m̃(ρ) = e^{Δ*ρ}/(1 + e^{Δ*ρ})`. The value `V(ρ, t)` of
//! optimally stopping before `T` satisfies
//! `min{ϖ − V, c + ∂_tV + (Δ*/2)(2m̃ − 1)∂_ρV + ½∂²_ρV} = 0` with `V(·, T) = ϖ`,
//! where `ϖ(ρ)` is the posterior regret of stopping now. The explicit upwind
//! scheme here is monotone under the step restriction checked in
//! [`HjbGrid::validate`].

use serde::{Deserialize, Serialize};

use crate::analytics::{universal_constants, DesignParams};
use crate::error::{Result, WaldError};

/// Fraction of the stability bound used for the time step by default.
pub const STABILITY_FRACTION: f64 = 0.9;
const DEFAULT_SNAPSHOTS: usize = 60;

/// Approximate posterior `m̃(ρ)`, evaluated without overflow.
pub fn belief(rho: f64, delta_star: f64) -> f64 {
    let x = delta_star * rho;
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ϖ(ρ) = ((σ₁+σ₀)Δ*/2)·min{m̃, 1 − m̃}`.
pub fn obstacle(rho: f64, delta_star: f64, sigma_sum: f64) -> f64 {
    0.5 * sigma_sum * delta_star / (1.0 + (delta_star * rho.abs()).exp())
}

/// Drift `(Δ*/2)(2m̃(ρ) − 1)` of `ρ` under the approximate posterior.
pub fn belief_drift(rho: f64, delta_star: f64) -> f64 {
    0.5 * delta_star * (0.5 * delta_star * rho).tanh()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HjbGrid {
    pub rho_min: f64,
    pub rho_max: f64,
    pub n_rho: usize,
    pub horizon: f64,
    pub n_t: usize,
    pub delta_star: f64,
    pub c: f64,
    pub sigma_sum: f64,
}

impl HjbGrid {
    /// Symmetric grid on `[−k·γ*, k·γ*]` with spacing close to `d_rho` and the
    /// time step at [`STABILITY_FRACTION`] of the bound.
    pub fn for_params(params: &DesignParams, d_rho: f64, horizon: f64, width_in_gammas: f64) -> Result<Self> {
        let eq = crate::analytics::scaled_equilibrium(params);
        if !(d_rho > 0.0 && horizon > 0.0 && width_in_gammas > 0.0) {
            return Err(WaldError::Config(
                "grid spacing, horizon and width must be positive".into(),
            ));
        }
        let half_cells = (width_in_gammas * eq.gamma_star / d_rho).ceil() as usize;
        let rho_max = half_cells as f64 * d_rho;
        let mut grid = Self {
            rho_min: -rho_max,
            rho_max,
            n_rho: 2 * half_cells + 1,
            horizon,
            n_t: 1,
            delta_star: eq.delta_star,
            c: params.c(),
            sigma_sum: params.sigma_sum(),
        };
        grid.n_t = (horizon / (STABILITY_FRACTION * grid.stability_bound())).ceil() as usize;
        grid.validate()?;
        Ok(grid)
    }

    pub fn d_rho(&self) -> f64 {
        (self.rho_max - self.rho_min) / (self.n_rho - 1) as f64
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_t as f64
    }

    pub fn max_drift(&self) -> f64 {
        belief_drift(self.rho_min.abs().max(self.rho_max.abs()), self.delta_star)
    }

    /// `(Δρ)²/(1 + max|b|·Δρ)`.
    pub fn stability_bound(&self) -> f64 {
        let h = self.d_rho();
        h * h / (1.0 + self.max_drift() * h)
    }

    /// The threshold of the game with this grid's cost and scale.
    pub fn gamma_star(&self) -> f64 {
        universal_constants().gamma0 * (self.sigma_sum / (2.0 * self.c)).cbrt()
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.rho_min,
            self.rho_max,
            self.horizon,
            self.delta_star,
            self.c,
            self.sigma_sum,
        ];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(WaldError::Config("HJB grid fields must be finite".into()));
        }
        if self.n_rho < 3 || self.n_t == 0 || !(self.rho_max > self.rho_min) {
            return Err(WaldError::Config(
                "HJB grid needs n_rho >= 3, n_t >= 1, rho_max > rho_min".into(),
            ));
        }
        if !(self.horizon > 0.0 && self.delta_star > 0.0 && self.c > 0.0 && self.sigma_sum > 0.0) {
            return Err(WaldError::Config(
                "HJB horizon, delta_star, c and sigma_sum must be positive".into(),
            ));
        }
        let g = self.gamma_star();
        if self.rho_max < 3.0 * g || self.rho_min > -3.0 * g {
            return Err(WaldError::Config(format!(
                "rho range [{}, {}] must cover ±3γ* = ±{:.6}",
                self.rho_min,
                self.rho_max,
                3.0 * g
            )));
        }
        if self.dt() > self.stability_bound() {
            return Err(WaldError::Config(format!(
                "time step {:e} exceeds the monotonicity bound {:e}",
                self.dt(),
                self.stability_bound()
            )));
        }
        Ok(())
    }

    pub fn rho_nodes(&self) -> Vec<f64> {
        let h = self.d_rho();
        (0..self.n_rho).map(|i| self.rho_min + i as f64 * h).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HjbSolution {
    pub grid: HjbGrid,
    pub rho: Vec<f64>,
    pub obstacle: Vec<f64>,
    /// Times of the stored layers, increasing from 0 to `T`.
    pub snapshot_times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub stop_region: Vec<Vec<bool>>,
    /// Time of every level `t_k = k·Δt`, `k = 0..=n_t`.
    pub boundary_times: Vec<f64>,
    /// Smallest positive `ρ` in the stopping region at each level (NaN if none).
    pub boundary_curve: Vec<f64>,
    /// `max_ρ |V(ρ, Δt) − V(ρ, 0)|/Δt`.
    pub time_derivative_at_zero: f64,
}

impl HjbSolution {
    pub fn values_at_zero(&self) -> &[f64] {
        &self.values[0]
    }

    /// `V(ρ, 0)` by linear interpolation.
    pub fn value_at(&self, rho: f64) -> f64 {
        let h = self.grid.d_rho();
        let pos = ((rho - self.grid.rho_min) / h).clamp(0.0, (self.rho.len() - 1) as f64);
        let i = (pos.floor() as usize).min(self.rho.len() - 2);
        let w = pos - i as f64;
        let v = &self.values[0];
        (1.0 - w) * v[i] + w * v[i + 1]
    }

    pub fn value_at_origin(&self) -> f64 {
        self.value_at(0.0)
    }

    pub fn boundary_at_zero(&self) -> f64 {
        self.boundary_curve[0]
    }
}

/// Stopping boundary on `ρ > 0` for one layer: the first node where `V = ϖ`,
/// refined by linear extrapolation of `√(ϖ − V)` from the two preceding
/// continuation nodes (the gap closes quadratically under smooth fit).
fn boundary_of(rho: &[f64], obs: &[f64], v: &[f64], stop: &[bool]) -> f64 {
    let mid = rho.partition_point(|&r| r <= 0.0);
    let Some(j) = (mid..rho.len()).find(|&i| stop[i]) else {
        return f64::NAN;
    };
    if j < mid + 2 {
        return rho[j];
    }
    let g1 = (obs[j - 1] - v[j - 1]).max(0.0).sqrt();
    let g2 = (obs[j - 2] - v[j - 2]).max(0.0).sqrt();
    if g2 <= g1 {
        return rho[j];
    }
    let h = rho[j] - rho[j - 1];
    let root = rho[j - 1] + h * g1 / (g2 - g1);
    root.clamp(rho[j - 1], rho[j])
}

pub fn solve_hjb(grid: &HjbGrid) -> Result<HjbSolution> {
    solve_hjb_with_snapshots(grid, DEFAULT_SNAPSHOTS)
}

pub fn solve_hjb_with_snapshots(grid: &HjbGrid, snapshots: usize) -> Result<HjbSolution> {
    grid.validate()?;
    let rho = grid.rho_nodes();
    let n = rho.len();
    let h = grid.d_rho();
    let dt = grid.dt();
    let obs: Vec<f64> = rho
        .iter()
        .map(|&r| obstacle(r, grid.delta_star, grid.sigma_sum))
        .collect();
    let drift: Vec<f64> = rho.iter().map(|&r| belief_drift(r, grid.delta_star)).collect();
    let stride = (grid.n_t / snapshots.max(1)).max(1);

    let mut v = obs.clone();
    let mut next = obs.clone();
    let mut stop = vec![true; n];
    let mut layers = vec![(grid.horizon, v.clone(), stop.clone())];
    let mut boundary = vec![f64::NAN; grid.n_t + 1];
    boundary[grid.n_t] = boundary_of(&rho, &obs, &v, &stop);
    let mut previous_layer = Vec::new();

    for k in (0..grid.n_t).rev() {
        if k == 0 {
            previous_layer = v.clone();
        }
        for i in 1..n - 1 {
            let b = drift[i];
            let grad = if b > 0.0 {
                (v[i + 1] - v[i]) / h
            } else {
                (v[i] - v[i - 1]) / h
            };
            let lap = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (h * h);
            let cont = v[i] + dt * (grid.c + b * grad + 0.5 * lap);
            if cont >= obs[i] {
                next[i] = obs[i];
                stop[i] = true;
            } else {
                next[i] = cont;
                stop[i] = false;
            }
        }
        next[0] = obs[0];
        next[n - 1] = obs[n - 1];
        stop[0] = true;
        stop[n - 1] = true;
        std::mem::swap(&mut v, &mut next);
        if v.iter().any(|x| !x.is_finite()) {
            return Err(WaldError::Numerical {
                context: "HJB march produced a non-finite value",
                achieved: f64::NAN,
                target: 0.0,
            });
        }
        boundary[k] = boundary_of(&rho, &obs, &v, &stop);
        if k % stride == 0 {
            layers.push((k as f64 * dt, v.clone(), stop.clone()));
        }
    }

    let time_derivative_at_zero = v
        .iter()
        .zip(&previous_layer)
        .map(|(a, b)| (b - a).abs() / dt)
        .fold(0.0, f64::max);
    layers.reverse();
    let (snapshot_times, values, stop_region) = layers.into_iter().fold(
        (Vec::new(), Vec::new(), Vec::new()),
        |(mut t, mut vs, mut ss), (time, val, st)| {
            t.push(time);
            vs.push(val);
            ss.push(st);
            (t, vs, ss)
        },
    );
    Ok(HjbSolution {
        grid: *grid,
        rho,
        obstacle: obs,
        snapshot_times,
        values,
        stop_region,
        boundary_times: (0..=grid.n_t).map(|k| k as f64 * dt).collect(),
        boundary_curve: boundary,
        time_derivative_at_zero,
    })
}

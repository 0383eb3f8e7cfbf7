//! Vector environments: the parabolic solver with several weights and the
//! componentwise uniform bounds.

use crate::diagnostics::{kv_text, within_factor};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::{EnvBounds, GrowthModel};
use crate::pde::{run_pde, PdeConfig, PdeRun};
use crate::series::TimeSeries;

/// Number of environment levels sampled when checking the sign of `dR/dI_k`.
const MONOTONICITY_SAMPLES: usize = 9;

/// Largest and smallest `-dR/dI_k` over grid nodes and a diagonal sweep of
/// the window, per component.
pub fn monotonicity_budget(model: &GrowthModel, grid: &Grid) -> Vec<(f64, f64)> {
    let (lo, hi) = model.window();
    let n = model.env_count();
    (0..n)
        .map(|k| {
            let mut range = (f64::INFINITY, f64::NEG_INFINITY);
            for m in 0..MONOTONICITY_SAMPLES {
                let i = lo + (hi - lo) * (m as f64 + 0.5) / MONOTONICITY_SAMPLES as f64;
                let env = vec![i; n];
                for &x in grid.nodes() {
                    let d = -model.d_rate_d_env(x, &env, k);
                    range = (range.0.min(d), range.1.max(d));
                }
            }
            range
        })
        .collect()
}

/// Runs the splitting scheme with every environment component recomputed
/// at each substep. Weights must be positive and every `dR/dI_k` negative.
pub fn run_pde_multi(model: &GrowthModel, grid: &Grid, cfg: &PdeConfig) -> Result<PdeRun> {
    for k in 0..model.env_count() {
        if let Some(&x) = grid.nodes().iter().find(|&&x| model.psi(k, x) <= 0.0) {
            return Err(Error::AssumptionViolation(format!(
                "weight {k} is not positive at x = {x}"
            )));
        }
    }
    for (k, (lo, _)) in monotonicity_budget(model, grid).into_iter().enumerate() {
        if lo <= 0.0 {
            return Err(Error::AssumptionViolation(format!(
                "growth rate is not strictly decreasing in environment component {k}"
            )));
        }
    }
    run_pde(model, grid, cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsReport {
    pub eps: f64,
    pub bounds: EnvBounds,
    /// Worst distance outside `[lower, upper]` per component.
    pub excursions: Vec<f64>,
    /// Time of the worst excursion per component, `None` when inside.
    pub witness_times: Vec<Option<f64>>,
    /// `excursions / eps^2`.
    pub normalized: Vec<f64>,
}

impl BoundsReport {
    pub fn worst_normalized(&self) -> f64 {
        self.normalized.iter().copied().fold(0.0, f64::max)
    }

    pub fn to_text(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(" ");
        kv_text(&[
            ("bounds.eps", self.eps.to_string()),
            ("bounds.lower", self.bounds.lower.to_string()),
            ("bounds.upper", self.bounds.upper.to_string()),
            ("bounds.excursions", join(&self.excursions)),
            ("bounds.normalized", join(&self.normalized)),
            (
                "bounds.witness_times",
                self.witness_times
                    .iter()
                    .map(|t| t.map_or("none".to_string(), |t| t.to_string()))
                    .collect::<Vec<_>>()
                    .join(" "),
            ),
        ])
    }
}

/// Per-component excursion of the environment outside `bounds`.
pub fn check_bounds_multi(series: &TimeSeries, bounds: EnvBounds, eps: f64) -> BoundsReport {
    let mut excursions = Vec::with_capacity(series.n_env());
    let mut witness_times = Vec::with_capacity(series.n_env());
    for col in &series.env {
        let mut worst = (0.0, None);
        for (&i, &t) in col.iter().zip(&series.times) {
            let e = (bounds.lower - i).max(i - bounds.upper);
            if e > worst.0 {
                worst = (e, Some(t));
            }
        }
        excursions.push(worst.0);
        witness_times.push(worst.1);
    }
    let normalized = excursions.iter().map(|e| e / (eps * eps)).collect();
    BoundsReport {
        eps,
        bounds,
        excursions,
        witness_times,
        normalized,
    }
}

/// True when every run's normalized excursion lies within `factor` of the
/// first (coarsest) run, excursions below `floor` counting as `floor`.
pub fn sweep_bounded(reports: &[BoundsReport], factor: f64, floor: f64) -> bool {
    let Some(first) = reports.first() else {
        return true;
    };
    let worst: Vec<f64> = reports.iter().map(BoundsReport::worst_normalized).collect();
    within_factor(&worst, first.worst_normalized(), factor, floor)
}

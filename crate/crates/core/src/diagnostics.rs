//! A-priori functionals and structural checks on computed trajectories.
//! Every report is a pure function of run output.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::hj::{run_constrained_hj, HjConfig, HjRun};
use crate::model::{find_zero_trait, GrowthModel, MonomorphicStructure, Monotonicity, NodalRates};
use crate::pde::{DensityState, PdeRun};
use crate::series::{JumpDetector, JumpEvent, TimeSeries};

/// Renders `key: value` lines.
pub fn kv_text(pairs: &[(&str, String)]) -> String {
    let mut out = String::new();
    for (k, v) in pairs {
        let _ = writeln!(out, "{k}: {v}");
    }
    out
}

/// Change in the environment caused by moving the concentration point
/// five cells: `5 dx sup |R_x| / inf |R_I|` over nodes and the window.
pub fn env_jump_floor(model: &GrowthModel, grid: &Grid) -> f64 {
    let (lo, hi) = model.window();
    let n = model.env_count();
    let (mut slope, mut sens) = (0.0f64, f64::INFINITY);
    for m in 0..21 {
        let env = vec![lo + (hi - lo) * m as f64 / 20.0; n];
        for &x in grid.nodes() {
            slope = slope.max(model.d_rate_dx(x, &env).abs());
            let total: f64 = (0..n).map(|k| model.d_rate_d_env(x, &env, k).abs()).sum();
            sens = sens.min(total);
        }
    }
    if sens > 0.0 {
        5.0 * grid.dx() * slope / sens
    } else {
        0.0
    }
}

/// Environment and argmax detectors matched to the model and grid.
pub fn jump_detectors(model: &GrowthModel, grid: &Grid) -> (JumpDetector, JumpDetector) {
    (
        JumpDetector::for_env(env_jump_floor(model, grid)),
        JumpDetector::for_argmax(grid.dx()),
    )
}

/// `J = int (n / eps) psi_1 R` and `K = int (n / eps) R`.
pub fn bv_functionals(state: &DensityState, model: &GrowthModel, grid: &Grid) -> (f64, f64) {
    bv_functionals_with(state, &NodalRates::new(model, grid.nodes()), grid)
}

pub fn bv_functionals_with(state: &DensityState, rates: &NodalRates, grid: &Grid) -> (f64, f64) {
    let mut r = vec![0.0; state.n.len()];
    rates.fill(&state.env, &mut r);
    let psi = &rates.psi[0];
    let mut j = 0.0;
    let mut k = 0.0;
    for m in 0..r.len() {
        let nr = state.n[m] * r[m];
        j += nr * psi[m];
        k += nr;
    }
    let scale = grid.dx() / state.eps;
    (j * scale, k * scale)
}

/// Terms entering the decay of `(J)_-` for the first environment component:
/// `(int n lap(psi R) + int n lap(psi) * int n psi R_I, -int n psi R_I)`.
pub fn j_decay_terms(state: &DensityState, rates: &NodalRates, grid: &Grid) -> (f64, f64) {
    let len = state.n.len();
    let mut r = vec![0.0; len];
    let mut rx = vec![0.0; len];
    let mut rxx = vec![0.0; len];
    let mut ri = vec![0.0; len];
    rates.fill(&state.env, &mut r);
    rates.fill_dx(&state.env, &mut rx);
    rates.fill_dxx(&state.env, &mut rxx);
    rates.fill_d_env(&state.env, 0, &mut ri);
    let (psi, psi_x, psi_xx) = (&rates.psi[0], &rates.psi_dx[0], &rates.psi_dxx[0]);
    let mut lap = 0.0;
    let mut n_lap_psi = 0.0;
    let mut n_psi_ri = 0.0;
    for m in 0..len {
        let n = state.n[m];
        lap += n * (psi_xx[m] * r[m] + 2.0 * psi_x[m] * rx[m] + psi[m] * rxx[m]);
        n_lap_psi += n * psi_xx[m];
        n_psi_ri += n * psi[m] * ri[m];
    }
    let dx = grid.dx();
    let (lap, n_lap_psi, n_psi_ri) = (lap * dx, n_lap_psi * dx, n_psi_ri * dx);
    (lap + n_lap_psi * n_psi_ri, -n_psi_ri)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RsquareReport {
    pub lhs: f64,
    pub t_final: f64,
    pub eps: f64,
    pub ratio: f64,
}

impl RsquareReport {
    pub fn to_text(&self) -> String {
        kv_text(&[
            ("rsquare.lhs", format!("{:e}", self.lhs)),
            ("rsquare.t_final", self.t_final.to_string()),
            ("rsquare.eps", self.eps.to_string()),
            ("rsquare.ratio", format!("{:e}", self.ratio)),
        ])
    }
}

/// `int_0^T int n R^2` against `eps (1 + eps T)`.
pub fn check_rsquare_bound(run: &PdeRun) -> RsquareReport {
    let lhs = run.r2_cumulative.last().copied().unwrap_or(0.0);
    let t_final = run.series.times.last().copied().unwrap_or(0.0);
    rsquare_report(lhs, t_final, run.eps)
}

pub fn rsquare_report(lhs: f64, t_final: f64, eps: f64) -> RsquareReport {
    RsquareReport {
        lhs,
        t_final,
        eps,
        ratio: lhs / (eps * (1.0 + eps * t_final)),
    }
}

/// True when every value lies within `factor` of `reference`, with values
/// below `floor` treated as equal to `floor`.
pub fn within_factor(values: &[f64], reference: f64, factor: f64, floor: f64) -> bool {
    let r = reference.max(floor);
    values.iter().all(|&v| {
        let v = v.max(floor);
        v <= factor * r && r <= factor * v
    })
}

/// Constants of the `(J)_-` envelope estimated from run data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JConstants {
    pub k1: f64,
    pub k2: f64,
}

pub fn estimate_j_constants(run: &PdeRun) -> JConstants {
    let k1 = run
        .k1_terms
        .iter()
        .map(|v| (-v).max(0.0))
        .fold(0.0, f64::max);
    let k2 = run.k2_terms.iter().copied().fold(f64::INFINITY, f64::min);
    JConstants { k1, k2 }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JDecayReport {
    pub k1: f64,
    pub k2: f64,
    pub slack: f64,
    pub worst_margin: f64,
    pub worst_time: f64,
    pub passed: bool,
}

impl JDecayReport {
    pub fn to_text(&self) -> String {
        kv_text(&[
            ("j_decay.k1", format!("{:e}", self.k1)),
            ("j_decay.k2", format!("{:e}", self.k2)),
            ("j_decay.slack", format!("{:e}", self.slack)),
            ("j_decay.worst_margin", format!("{:e}", self.worst_margin)),
            ("j_decay.worst_time", self.worst_time.to_string()),
            ("j_decay.passed", self.passed.to_string()),
        ])
    }
}

/// `(J(t))_- <= eps K1 / K2 + (J(0))_- exp(-K2 t / eps) + slack` at every
/// sample; the margin is the right side minus the left side.
pub fn check_j_decay(series: &TimeSeries, eps: f64, k1: f64, k2: f64, slack: f64) -> JDecayReport {
    let neg = |v: f64| (-v).max(0.0);
    let j0 = series.j.first().copied().map(neg).unwrap_or(0.0);
    let mut worst_margin = f64::INFINITY;
    let mut worst_time = 0.0;
    for (&t, &j) in series.times.iter().zip(&series.j) {
        let bound = eps * k1 / k2 + j0 * (-k2 * t / eps).exp() + slack;
        let margin = bound - neg(j);
        if margin < worst_margin {
            worst_margin = margin;
            worst_time = t;
        }
    }
    JDecayReport {
        k1,
        k2,
        slack,
        worst_margin,
        worst_time,
        passed: k2 > 0.0 && worst_margin >= 0.0,
    }
}

/// Lower envelope `y(t)` solving `y' = 2 y^2 - rbar` with `y(0) = -inf`.
pub fn semiconvexity_envelope(rbar: f64, t: f64) -> f64 {
    if rbar <= 0.0 {
        return -1.0 / (2.0 * t);
    }
    let s = (2.0 * rbar).sqrt();
    -(rbar / 2.0).sqrt() / (s * t).tanh()
}

/// `sup |R_xx|` over grid nodes and `levels` environment values in `[i_lo, i_hi]`.
pub fn estimate_rbar(model: &GrowthModel, grid: &Grid, i_lo: f64, i_hi: f64, levels: usize) -> f64 {
    let levels = levels.max(2);
    let mut sup: f64 = 0.0;
    for m in 0..levels {
        let i = i_lo + (i_hi - i_lo) * m as f64 / (levels - 1) as f64;
        let env = vec![i; model.env_count()];
        for &x in grid.nodes() {
            sup = sup.max(model.d2_rate_dx2(x, &env).abs());
        }
    }
    sup
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemiconvexityReport {
    pub rbar: f64,
    pub t_min: f64,
    pub slack: f64,
    pub worst_margin: f64,
    pub worst_time: f64,
    pub checked: usize,
    pub passed: bool,
}

impl SemiconvexityReport {
    pub fn to_text(&self) -> String {
        kv_text(&[
            ("semiconvexity.rbar", self.rbar.to_string()),
            ("semiconvexity.t_min", self.t_min.to_string()),
            ("semiconvexity.slack", self.slack.to_string()),
            ("semiconvexity.worst_margin", self.worst_margin.to_string()),
            ("semiconvexity.worst_time", self.worst_time.to_string()),
            ("semiconvexity.checked", self.checked.to_string()),
            ("semiconvexity.passed", self.passed.to_string()),
        ])
    }
}

/// `min D^2 phi >= y(t) - slack` for every sample with `t >= t_min`.
pub fn semiconvexity_check(
    times: &[f64],
    min_second_diff: &[f64],
    rbar: f64,
    t_min: f64,
    slack: f64,
) -> SemiconvexityReport {
    let mut worst_margin = f64::INFINITY;
    let mut worst_time = f64::NAN;
    let mut checked = 0;
    for (&t, &d2) in times.iter().zip(min_second_diff) {
        if t < t_min || t <= 0.0 {
            continue;
        }
        checked += 1;
        let margin = d2 - (semiconvexity_envelope(rbar, t) - slack);
        if margin < worst_margin {
            worst_margin = margin;
            worst_time = t;
        }
    }
    SemiconvexityReport {
        rbar,
        t_min,
        slack,
        worst_margin,
        worst_time,
        checked,
        passed: checked > 0 && worst_margin >= 0.0,
    }
}

/// `|R(xbar_left(t), I(t))|` at every sample.
pub fn zero_residual_series(series: &TimeSeries, model: &GrowthModel) -> Vec<f64> {
    (0..series.len())
        .map(|m| model.rate(series.xbar_left[m], &series.env_at(m)).abs())
        .collect()
}

/// Largest residual over samples with no jump flag within `radius`
/// samples, and the number of samples used.
pub fn residual_away_from_jumps(series: &TimeSeries, model: &GrowthModel, radius: usize, t_min: f64) -> (f64, usize) {
    let res = zero_residual_series(series, model);
    let mut worst: f64 = 0.0;
    let mut used = 0;
    for (m, r) in res.iter().enumerate() {
        if series.times[m] >= t_min && series.far_from_jumps(m, radius) && r.is_finite() {
            worst = worst.max(*r);
            used += 1;
        }
    }
    (worst, used)
}

/// `|xbar(t) - X(I(t))|` with the zero trait of the model; NaN where the
/// zero trait is not unique.
pub fn concentration_gap(series: &TimeSeries, model: &GrowthModel) -> Vec<f64> {
    (0..series.len())
        .map(|m| match find_zero_trait(model, series.env[0][m]) {
            Ok(x) => (series.xbar_left[m] - x).abs(),
            Err(_) => f64::NAN,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderingReport {
    /// First and last sample time at which `I` decreased beyond the slack.
    pub violation_window: Option<(f64, f64)>,
    pub env_nondecreasing: bool,
    pub xbar_monotone: bool,
    pub worst_xbar_backstep: f64,
    pub jumps: Vec<JumpEvent>,
    pub jumps_in_direction: bool,
}

impl OrderingReport {
    pub fn passed(&self) -> bool {
        self.env_nondecreasing && self.xbar_monotone && self.jumps_in_direction
    }

    /// Passes once the initial layer ending at `t_layer` is discarded.
    pub fn passes_after(&self, t_layer: f64) -> bool {
        let env_ok = match self.violation_window {
            None => true,
            Some((_, last)) => last <= t_layer,
        };
        env_ok && self.xbar_monotone && self.jumps_in_direction
    }

    pub fn to_text(&self) -> String {
        let window = match self.violation_window {
            Some((a, b)) => format!("{a} {b}"),
            None => "none".into(),
        };
        kv_text(&[
            ("ordering.env_nondecreasing", self.env_nondecreasing.to_string()),
            ("ordering.violation_window", window),
            ("ordering.xbar_monotone", self.xbar_monotone.to_string()),
            ("ordering.worst_xbar_backstep", self.worst_xbar_backstep.to_string()),
            ("ordering.jumps", self.jumps.len().to_string()),
            ("ordering.jumps_in_direction", self.jumps_in_direction.to_string()),
        ])
    }
}

/// First and last sample times where `I_1` drops by more than
/// `slack_rate * dt`, or `None` when it never does.
pub fn env_decrease_window(series: &TimeSeries, slack_rate: f64) -> Option<(f64, f64)> {
    let env = &series.env[0];
    let mut window: Option<(f64, f64)> = None;
    for m in 1..series.len() {
        let dt = series.times[m] - series.times[m - 1];
        if env[m] < env[m - 1] - slack_rate * dt {
            let t = series.times[m];
            window = Some(match window {
                None => (t, t),
                Some((a, _)) => (a, t),
            });
        }
    }
    window
}

/// Checks `I` nondecreasing with per-sample slack `slack_rate * dt`, the
/// direction of `xbar` (tolerating `xbar_tol` back-steps) and the
/// direction of every detected argmax jump.
pub fn monotonicity_and_ordering(
    series: &TimeSeries,
    structure: &MonomorphicStructure,
    slack_rate: f64,
    xbar_tol: f64,
    argmax_detector: &JumpDetector,
) -> OrderingReport {
    let window = env_decrease_window(series, slack_rate);
    let sign = match structure.direction {
        Monotonicity::Increasing => 1.0,
        Monotonicity::Decreasing => -1.0,
    };
    let mut running = sign * series.xbar_left[0];
    let mut worst_back: f64 = 0.0;
    for &x in &series.xbar_left {
        let v = sign * x;
        worst_back = worst_back.max(running - v);
        running = running.max(v);
    }
    let jumps = argmax_detector.events(&series.times, &series.xbar_left);
    let jumps_in_direction = jumps.iter().all(|e| sign * e.size() > 0.0);
    OrderingReport {
        violation_window: window,
        env_nondecreasing: window.is_none(),
        xbar_monotone: worst_back <= xbar_tol,
        worst_xbar_backstep: worst_back,
        jumps,
        jumps_in_direction,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GronwallReport {
    pub c_hat: f64,
    pub initial_distance: f64,
    pub max_distance: f64,
    pub slack: f64,
    /// Largest `distance / envelope` over the run.
    pub worst_ratio: f64,
    pub passed: bool,
    pub distances: Vec<f64>,
}

impl GronwallReport {
    pub fn to_text(&self) -> String {
        kv_text(&[
            ("gronwall.c_hat", self.c_hat.to_string()),
            ("gronwall.initial_distance", format!("{:e}", self.initial_distance)),
            ("gronwall.max_distance", format!("{:e}", self.max_distance)),
            ("gronwall.slack", format!("{:e}", self.slack)),
            ("gronwall.worst_ratio", self.worst_ratio.to_string()),
            ("gronwall.passed", self.passed.to_string()),
        ])
    }
}

/// Runs two configurations with one common step size: a pilot of each
/// finds the stability limit, then both rerun capped at `safety` times the
/// smaller limit so their time grids coincide.
pub fn matched_runs(
    model: &GrowthModel,
    grid: &Grid,
    a: &HjConfig,
    b: &HjConfig,
    safety: f64,
) -> Result<(HjRun, HjRun)> {
    let pa = run_constrained_hj(model, grid, a)?;
    let pb = run_constrained_hj(model, grid, b)?;
    let mut cap = safety * pa.cfl_dt_min.min(pb.cfl_dt_min);
    if let Some(d) = a.dt_max.into_iter().chain(b.dt_max).reduce(f64::min) {
        cap = cap.min(d);
    }
    let (mut a, mut b) = (a.clone(), b.clone());
    a.dt_max = Some(cap);
    b.dt_max = Some(cap);
    a.store_profiles = true;
    b.store_profiles = true;
    let ra = run_constrained_hj(model, grid, &a)?;
    let rb = run_constrained_hj(model, grid, &b)?;
    if ra.step_dt != rb.step_dt {
        return Err(Error::IncompatibleRuns(
            "step sizes diverged; lower the safety factor".into(),
        ));
    }
    Ok((ra, rb))
}

/// Compares `Psi = phi - g(x) Sigma(t)`, `Sigma = sum dt Q(I)`, between two
/// runs of a separable model `R = h(x) + g(x) Q(I)`. The growth rate `C` is
/// fitted on the first `fit_fraction` of the run and the distance must stay
/// below `exp(C t) (d(0) + slack)` throughout.
pub fn gronwall_stability(
    a: &HjRun,
    b: &HjRun,
    model: &GrowthModel,
    grid: &Grid,
    fit_fraction: f64,
    slack: f64,
) -> Result<GronwallReport> {
    let sep = model.separable().ok_or_else(|| {
        Error::ModelMismatch("stability harness needs R = h(x) + g(x) Q(I)".into())
    })?;
    if a.profiles.is_empty() || b.profiles.is_empty() {
        return Err(Error::IncompatibleRuns("runs did not store phase profiles".into()));
    }
    if a.profiles.len() != b.profiles.len()
        || a.profiles.iter().chain(&b.profiles).any(|p| p.len() != grid.n_cells())
    {
        return Err(Error::IncompatibleRuns(
            "runs differ in sample count or grid layout".into(),
        ));
    }
    let times = &a.series.times;
    if times
        .iter()
        .zip(&b.series.times)
        .any(|(x, y)| (x - y).abs() > 1e-12 * x.abs().max(1.0))
    {
        return Err(Error::IncompatibleRuns("runs were sampled at different times".into()));
    }
    let g: Vec<f64> = grid.nodes().iter().map(|&x| sep.coupling.eval(x)).collect();
    let sigmas = |run: &HjRun| -> Vec<f64> {
        let mut acc = 0.0;
        let mut done = 0;
        run.sample_steps
            .iter()
            .map(|&s| {
                while done < s {
                    acc += run.step_dt[done] * sep.response.eval(run.step_env[done]);
                    done += 1;
                }
                acc
            })
            .collect()
    };
    let (sa, sb) = (sigmas(a), sigmas(b));
    let distances: Vec<f64> = (0..times.len())
        .map(|m| {
            a.profiles[m]
                .iter()
                .zip(&b.profiles[m])
                .zip(&g)
                .map(|((pa, pb), gj)| ((pa - gj * sa[m]) - (pb - gj * sb[m])).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let d0 = distances[0];
    let t_end = *times.last().unwrap();
    let mut c_hat: f64 = 0.0;
    for (m, &t) in times.iter().enumerate() {
        if t > 0.0 && t <= fit_fraction * t_end && d0 > 0.0 && distances[m] > 0.0 {
            c_hat = c_hat.max((distances[m] / d0).ln() / t);
        }
    }
    let mut worst_ratio: f64 = 0.0;
    for (m, &t) in times.iter().enumerate() {
        let env = (c_hat * t).exp() * (d0 + slack);
        if env > 0.0 {
            worst_ratio = worst_ratio.max(distances[m] / env);
        } else if distances[m] > 0.0 {
            worst_ratio = f64::INFINITY;
        }
    }
    Ok(GronwallReport {
        c_hat,
        initial_distance: d0,
        max_distance: distances.iter().copied().fold(0.0, f64::max),
        slack,
        worst_ratio,
        passed: worst_ratio <= 1.0,
        distances,
    })
}

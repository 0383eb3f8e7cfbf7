//! Parabolic solver for `n_t - eps n_xx = n R(x, I) / eps`,
//! `I_k = int psi_k n`, on a truncated interval with zero-flux boundaries.

use crate::diagnostics::{bv_functionals_with, j_decay_terms};
use crate::error::{Error, Result};
use crate::grid::{discrete_lipschitz, min_second_difference, Grid};
use crate::init::InitSpec;
use crate::model::{find_equilibrium_scale, GrowthModel, NodalRates};
use crate::series::{Sample, TimeSeries};
use crate::tridiag::NeumannHeatSolver;

/// Densities are never allowed below this value.
pub const DENSITY_FLOOR: f64 = 1e-300;
/// Relative tolerance defining the argmax set of a density.
pub const DENSITY_ARGMAX_RTOL: f64 = 1e-12;
/// Fraction of the domain on each side watched by the boundary-mass guard.
pub const BOUNDARY_BAND: f64 = 0.05;
pub const BOUNDARY_MASS_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    pub t: f64,
    pub n: Vec<f64>,
    pub env: Vec<f64>,
    pub eps: f64,
}

/// `I_k = int psi_k n` with the grid quadrature.
pub fn compute_environment(n: &[f64], model: &GrowthModel, grid: &Grid) -> Vec<f64> {
    (0..model.env_count())
        .map(|k| grid.integrate_with(|j, x| model.psi(k, x) * n[j]))
        .collect()
}

fn environment_tabulated(n: &[f64], rates: &NodalRates, dx: f64) -> Vec<f64> {
    rates
        .psi
        .iter()
        .map(|w| w.iter().zip(n).map(|(a, b)| a * b).sum::<f64>() * dx)
        .collect()
}

/// Phase `eps ln n` with the indices that hit the density floor.
#[derive(Debug, Clone, PartialEq)]
pub struct HopfCole {
    pub phi: Vec<f64>,
    pub clamped: Vec<usize>,
}

pub fn hopf_cole(n: &[f64], eps: f64) -> HopfCole {
    let mut clamped = Vec::new();
    let phi = n
        .iter()
        .enumerate()
        .map(|(j, &v)| {
            if v <= DENSITY_FLOOR {
                clamped.push(j);
                eps * DENSITY_FLOOR.ln()
            } else {
                eps * v.ln()
            }
        })
        .collect();
    HopfCole { phi, clamped }
}

pub fn inverse_hopf_cole(phi: &[f64], eps: f64) -> Vec<f64> {
    phi.iter().map(|p| (p / eps).exp()).collect()
}

/// Default step `min(0.9 dx^2 / (2 eps), 0.5 eps)` times `dt_scale`.
pub fn default_dt(dx: f64, eps: f64, dt_scale: f64) -> f64 {
    (0.9 * dx * dx / (2.0 * eps)).min(0.5 * eps) * dt_scale
}

/// Reusable tables and buffers for repeated steps on one grid.
pub struct ParabolicStepper<'a> {
    model: &'a GrowthModel,
    grid: &'a Grid,
    rates: NodalRates,
    heat: NeumannHeatSolver,
    r: Vec<f64>,
}

impl<'a> ParabolicStepper<'a> {
    pub fn new(model: &'a GrowthModel, grid: &'a Grid) -> Self {
        let n = grid.n_cells();
        Self {
            model,
            grid,
            rates: NodalRates::new(model, grid.nodes()),
            heat: NeumannHeatSolver::new(n, 0.0),
            r: vec![0.0; n],
        }
    }

    pub fn rates(&self) -> &NodalRates {
        &self.rates
    }

    pub fn environment(&self, n: &[f64]) -> Vec<f64> {
        environment_tabulated(n, &self.rates, self.grid.dx())
    }

    fn check_window(&self, t: f64, env: &[f64]) -> Result<()> {
        if self.model.in_window(env) {
            Ok(())
        } else {
            let (lo, hi) = self.model.window();
            Err(Error::RegimeExit {
                t,
                env: env.to_vec(),
                lo,
                hi,
            })
        }
    }

    fn react(&mut self, state: &mut DensityState, half_dt: f64) {
        self.rates.fill(&state.env, &mut self.r);
        let c = half_dt / state.eps;
        for (v, r) in state.n.iter_mut().zip(&self.r) {
            *v = (*v * (c * r).exp()).max(DENSITY_FLOOR);
        }
    }

    /// One Strang step. Returns `int n R(x, I)^2` at the step start.
    pub fn step(&mut self, state: &mut DensityState, dt: f64) -> Result<f64> {
        if !(dt > 0.0) {
            return Err(Error::Invalid(format!("time step must be positive, got {dt}")));
        }
        self.check_window(state.t, &state.env)?;
        self.rates.fill(&state.env, &mut self.r);
        let r2 = self
            .r
            .iter()
            .zip(&state.n)
            .map(|(r, n)| n * r * r)
            .sum::<f64>()
            * self.grid.dx();

        self.react(state, 0.5 * dt);
        let dx = self.grid.dx();
        self.heat.set_ratio(state.eps * dt / (dx * dx));
        self.heat.solve(&mut state.n);
        for v in &mut state.n {
            *v = v.max(DENSITY_FLOOR);
        }
        state.env = self.environment(&state.n);
        self.check_window(state.t + dt, &state.env)?;
        self.react(state, 0.5 * dt);
        state.env = self.environment(&state.n);
        state.t += dt;
        Ok(r2)
    }
}

/// Single step from a state; see `ParabolicStepper` for repeated steps.
pub fn step_parabolic(
    state: &DensityState,
    dt: f64,
    model: &GrowthModel,
    grid: &Grid,
) -> Result<DensityState> {
    let mut stepper = ParabolicStepper::new(model, grid);
    let mut next = state.clone();
    next.env = stepper.environment(&next.n);
    stepper.step(&mut next, dt)?;
    Ok(next)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialDensity {
    pub n: Vec<f64>,
    pub env: Vec<f64>,
    /// Factor applied to `exp(phi0 / eps)`.
    pub scale: f64,
    /// Trait where `phi0` peaks.
    pub peak: f64,
}

/// `n0 = s exp(phi0 / eps)`. With `well_prepared`, `s` solves
/// `R(peak, I(n0)) = 0`; the result is then multiplied by `mass_scale`.
pub fn initial_density(
    model: &GrowthModel,
    grid: &Grid,
    init: &InitSpec,
    eps: f64,
    well_prepared: bool,
    mass_scale: f64,
) -> Result<InitialDensity> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Invalid(format!("eps must be positive, got {eps}")));
    }
    if !(mass_scale > 0.0 && mass_scale.is_finite()) {
        return Err(Error::Invalid(format!(
            "initial mass scale must be positive, got {mass_scale}"
        )));
    }
    let phi0 = init.sample(grid);
    let raw: Vec<f64> = phi0
        .iter()
        .map(|p| (p / eps).exp().max(DENSITY_FLOOR))
        .collect();
    let raw_env = compute_environment(&raw, model, grid);
    let peak = init.peak(grid);
    let mut scale = if well_prepared {
        find_equilibrium_scale(model, peak, &raw_env)?
    } else {
        1.0
    };
    scale *= mass_scale;
    let n: Vec<f64> = raw.iter().map(|v| (v * scale).max(DENSITY_FLOOR)).collect();
    let env = compute_environment(&n, model, grid);
    if !model.in_window(&env) {
        let (lo, hi) = model.window();
        return Err(Error::Invalid(format!(
            "initial environment {env:?} lies outside [{lo}, {hi}]; the initial mass must be positive and bounded"
        )));
    }
    Ok(InitialDensity {
        n,
        env,
        scale,
        peak,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdeConfig {
    pub eps: f64,
    pub t_final: f64,
    pub dt_scale: f64,
    pub sample_every: usize,
    pub snapshot_times: Vec<f64>,
    pub init: InitSpec,
    pub well_prepared: bool,
    pub mass_scale: f64,
    pub abort_on_boundary_mass: bool,
    /// Keep `eps ln n` at every sample.
    pub store_profiles: bool,
}

impl PdeConfig {
    pub fn new(eps: f64, t_final: f64, init: InitSpec) -> Self {
        Self {
            eps,
            t_final,
            dt_scale: 1.0,
            sample_every: 1,
            snapshot_times: Vec::new(),
            init,
            well_prepared: true,
            mass_scale: 1.0,
            abort_on_boundary_mass: false,
            store_profiles: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdeRun {
    pub series: TimeSeries,
    /// Density snapshots.
    pub snapshots: Vec<Snapshot>,
    /// `eps ln n` at every sample when requested.
    pub profiles: Vec<Vec<f64>>,
    /// `int_0^t int n R^2` at every sample.
    pub r2_cumulative: Vec<f64>,
    /// `int n lap(psi R) + int n lap(psi) int n psi dR/dI` at every sample.
    pub k1_terms: Vec<f64>,
    /// `-int n psi dR/dI` at every sample.
    pub k2_terms: Vec<f64>,
    pub warnings: Vec<String>,
    pub dt: f64,
    pub steps: usize,
    pub initial_scale: f64,
    pub eps: f64,
}

fn boundary_mass_fraction(n: &[f64], grid: &Grid) -> f64 {
    let band = BOUNDARY_BAND * (grid.x_max() - grid.x_min());
    let total: f64 = n.iter().sum();
    let outer: f64 = grid
        .nodes()
        .iter()
        .zip(n)
        .filter(|(&x, _)| x < grid.x_min() + band || x > grid.x_max() - band)
        .map(|(_, v)| v)
        .sum();
    outer / total
}

/// Leftmost and rightmost nodes with `n >= max (1 - rtol)`.
pub fn density_argmax(n: &[f64], rtol: f64) -> (usize, usize) {
    let max = n.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let cut = max * (1.0 - rtol);
    let left = n.iter().position(|&v| v >= cut).unwrap_or(0);
    let right = n.iter().rposition(|&v| v >= cut).unwrap_or(0);
    (left, right)
}

fn record(
    state: &DensityState,
    model: &GrowthModel,
    grid: &Grid,
    rates: &NodalRates,
    phi: &[f64],
) -> Sample {
    let (l, r) = density_argmax(&state.n, DENSITY_ARGMAX_RTOL);
    let nodes = grid.nodes();
    let (j, k) = bv_functionals_with(state, rates, grid);
    Sample {
        t: state.t,
        env: state.env.clone(),
        rho: grid.integrate(&state.n),
        xbar_left: nodes[l],
        xbar_right: nodes[r],
        j,
        k,
        residual: model.rate(nodes[l], &state.env).abs(),
        lipschitz: discrete_lipschitz(phi, grid.dx()),
        min_second_diff: min_second_difference(phi, grid.dx()),
    }
}

/// Advances the parabolic problem to `t_final`, sampling every
/// `sample_every` steps and at each snapshot time (which steps land on).
pub fn run_pde(model: &GrowthModel, grid: &Grid, cfg: &PdeConfig) -> Result<PdeRun> {
    if !(cfg.t_final > 0.0 && cfg.t_final.is_finite()) {
        return Err(Error::Invalid(format!("t_final must be positive, got {}", cfg.t_final)));
    }
    if cfg.sample_every == 0 {
        return Err(Error::Invalid("sample_every must be at least 1".into()));
    }
    if !(cfg.dt_scale > 0.0 && cfg.dt_scale.is_finite()) {
        return Err(Error::Invalid(format!("dt_scale must be positive, got {}", cfg.dt_scale)));
    }
    let init = initial_density(
        model,
        grid,
        &cfg.init,
        cfg.eps,
        cfg.well_prepared,
        cfg.mass_scale,
    )?;
    let mut stepper = ParabolicStepper::new(model, grid);
    let mut state = DensityState {
        t: 0.0,
        env: stepper.environment(&init.n),
        n: init.n,
        eps: cfg.eps,
    };
    let dt = default_dt(grid.dx(), cfg.eps, cfg.dt_scale);

    let mut snaps: Vec<f64> = cfg
        .snapshot_times
        .iter()
        .copied()
        .filter(|&t| t >= 0.0 && t <= cfg.t_final)
        .collect();
    snaps.sort_by(|a, b| a.total_cmp(b));
    snaps.dedup();

    let mut run = PdeRun {
        series: TimeSeries::new(model.env_count()),
        snapshots: Vec::new(),
        profiles: Vec::new(),
        r2_cumulative: Vec::new(),
        k1_terms: Vec::new(),
        k2_terms: Vec::new(),
        warnings: Vec::new(),
        dt,
        steps: 0,
        initial_scale: init.scale,
        eps: cfg.eps,
    };
    let mut r2 = 0.0;
    let mut warned = false;
    let mut next_snap = 0;

    let mut sample = |state: &DensityState, r2: f64, run: &mut PdeRun, stepper: &ParabolicStepper| -> Result<()> {
        let frac = boundary_mass_fraction(&state.n, grid);
        if frac > BOUNDARY_MASS_LIMIT && !warned {
            warned = true;
            let msg = format!(
                "boundary mass fraction {frac:.3e} exceeds {BOUNDARY_MASS_LIMIT:e} at t = {}",
                state.t
            );
            if cfg.abort_on_boundary_mass {
                return Err(Error::AssumptionViolation(msg));
            }
            run.warnings.push(msg);
        }
        let phi = hopf_cole(&state.n, state.eps).phi;
        run.series.push(record(state, model, grid, stepper.rates(), &phi));
        let (k1, k2) = j_decay_terms(state, stepper.rates(), grid);
        run.k1_terms.push(k1);
        run.k2_terms.push(k2);
        run.r2_cumulative.push(r2);
        if cfg.store_profiles {
            run.profiles.push(phi);
        }
        Ok(())
    };

    sample(&state, r2, &mut run, &stepper)?;
    while next_snap < snaps.len() && snaps[next_snap] <= 0.0 {
        run.snapshots.push(Snapshot {
            t: 0.0,
            values: state.n.clone(),
        });
        next_snap += 1;
    }
    let mut since_sample = 0;
    let tiny = 1e-12 * dt;
    while state.t < cfg.t_final - tiny {
        let mut target = cfg.t_final;
        if next_snap < snaps.len() {
            target = target.min(snaps[next_snap]);
        }
        let h = dt.min(target - state.t);
        let landing = target - state.t <= dt;
        r2 += h * stepper.step(&mut state, h)?;
        if landing {
            state.t = target;
        }
        run.steps += 1;
        since_sample += 1;
        let at_snap = next_snap < snaps.len() && landing && target == snaps[next_snap];
        let at_end = state.t >= cfg.t_final - tiny;
        if since_sample >= cfg.sample_every || at_snap || at_end {
            sample(&state, r2, &mut run, &stepper)?;
            since_sample = 0;
        }
        if at_snap {
            run.snapshots.push(Snapshot {
                t: state.t,
                values: state.n.clone(),
            });
            next_snap += 1;
        }
    }
    let (env_det, arg_det) = crate::diagnostics::jump_detectors(model, grid);
    run.series.flag_jumps(&env_det, &arg_det);
    Ok(run)
}

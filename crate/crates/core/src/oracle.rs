//! Closed-form solutions of the constrained phase equation for `R = x - I`
//! with parabolic initial data.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::hj::HjRun;
use crate::model::GrowthModel;
use crate::diagnostics::jump_detectors;

/// `a(t) = -1 / (1 + 4t)`.
pub fn coef_a(t: f64) -> f64 {
    -1.0 / (1.0 + 4.0 * t)
}

/// `b(t) = t/2 + t^2`, the bump centre.
pub fn coef_b(t: f64) -> f64 {
    0.5 * t + t * t
}

/// `c(t) = t^2/4 + t^3/3`, the integral of `b`.
pub fn coef_c(t: f64) -> f64 {
    0.25 * t * t + t * t * t / 3.0
}

/// Initial data `max(-x^2, -(x - alpha)^2 - delta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpSpec {
    pub alpha: f64,
    pub delta: f64,
}

impl BumpSpec {
    pub fn new(alpha: f64, delta: f64) -> Result<Self> {
        if !(alpha >= 0.0 && delta >= 0.0 && alpha.is_finite() && delta.is_finite()) {
            return Err(Error::Invalid(format!(
                "bump offset and depth must be finite and nonnegative, got ({alpha}, {delta})"
            )));
        }
        Ok(Self { alpha, delta })
    }

    pub fn single() -> Self {
        Self {
            alpha: 0.0,
            delta: 0.0,
        }
    }

    /// `delta / alpha`, infinite when the second bump never takes over.
    pub fn jump_time(&self) -> f64 {
        if self.alpha > 0.0 {
            self.delta / self.alpha
        } else {
            f64::INFINITY
        }
    }
}

/// `(phi, rho)` of the single bump.
pub fn single_bump(t: f64, x: f64) -> (f64, f64) {
    let b = coef_b(t);
    (coef_a(t) * (x - b) * (x - b), b)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Branch {
    BeforeJump,
    AtJump,
    AfterJump,
}

/// Multiplier value; at the jump only the one-sided limits exist.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleRho {
    Value(f64),
    OneSided { before: f64, after: f64 },
}

impl OracleRho {
    pub fn value(&self) -> Option<f64> {
        match self {
            OracleRho::Value(v) => Some(*v),
            OracleRho::OneSided { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoBumpValue {
    pub phi: f64,
    pub rho: OracleRho,
    pub branch: Branch,
}

/// Branch before the jump: the left bump carries the constraint.
fn before(t: f64, x: f64, spec: &BumpSpec) -> f64 {
    let left = single_bump(t, x).0;
    let right = single_bump(t, x - spec.alpha).0 - spec.delta + spec.alpha * t;
    left.max(right)
}

/// Branch after the jump: the right bump carries the constraint.
fn after(t: f64, x: f64, spec: &BumpSpec) -> f64 {
    let left = single_bump(t, x).0 + spec.delta - spec.alpha * t;
    let right = single_bump(t, x - spec.alpha).0;
    left.max(right)
}

pub fn two_bump(t: f64, x: f64, spec: &BumpSpec) -> TwoBumpValue {
    let tbar = spec.jump_time();
    let b = coef_b(t);
    if t < tbar {
        TwoBumpValue {
            phi: before(t, x, spec),
            rho: OracleRho::Value(b),
            branch: Branch::BeforeJump,
        }
    } else if t == tbar {
        TwoBumpValue {
            phi: before(t, x, spec),
            rho: OracleRho::OneSided {
                before: b,
                after: b + spec.alpha,
            },
            branch: Branch::AtJump,
        }
    } else {
        TwoBumpValue {
            phi: after(t, x, spec),
            rho: OracleRho::Value(b + spec.alpha),
            branch: Branch::AfterJump,
        }
    }
}

/// Location of the maximum; after the jump it sits on the right bump.
pub fn oracle_argmax(t: f64, spec: &BumpSpec) -> f64 {
    if t > spec.jump_time() {
        coef_b(t) + spec.alpha
    } else {
        coef_b(t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub times: Vec<f64>,
    /// Sup-norm phase error over nodes at each sample.
    pub phi_errors: Vec<f64>,
    /// `|I - rho|` at each sample; NaN at the jump time itself.
    pub rho_errors: Vec<f64>,
    pub max_phi_error: f64,
    pub final_rho_error: f64,
    pub jump_time_error: Option<f64>,
    pub detected_jump_time: Option<f64>,
    /// Multiplier just before and just after the detected jump.
    pub rho_one_sided: Option<(f64, f64)>,
    pub xbar_jump_size: Option<f64>,
}

impl OracleReport {
    pub fn to_text(&self) -> String {
        let opt = |v: Option<f64>| v.map_or("none".to_string(), |v| v.to_string());
        let mut out = crate::diagnostics::kv_text(&[
            ("oracle.max_phi_error", self.max_phi_error.to_string()),
            ("oracle.final_rho_error", self.final_rho_error.to_string()),
            ("oracle.detected_jump_time", opt(self.detected_jump_time)),
            ("oracle.jump_time_error", opt(self.jump_time_error)),
            ("oracle.xbar_jump_size", opt(self.xbar_jump_size)),
        ]);
        if let Some((a, b)) = self.rho_one_sided {
            out.push_str(&format!("oracle.rho_before: {a}\noracle.rho_after: {b}\n"));
        }
        out
    }
}

/// True when the model is `R = x - I` with unit weight.
pub fn is_linear_model(model: &GrowthModel) -> bool {
    if model.env_count() != 1 || !model.psi_is_unit() {
        return false;
    }
    let (lo, hi) = model.domain();
    (0..=8).all(|a| {
        let x = lo + (hi - lo) * a as f64 / 8.0;
        [-1.0, 0.0, 0.7, 3.0].iter().all(|&i| {
            let r = model.rate1(x, i);
            (r - (x - i)).abs() <= 1e-12 * (1.0 + x.abs() + i.abs())
        })
    })
}

/// Compares a stored-profile phase run against the closed form.
pub fn oracle_error(run: &HjRun, model: &GrowthModel, grid: &Grid, spec: &BumpSpec) -> Result<OracleReport> {
    if !is_linear_model(model) {
        return Err(Error::ModelMismatch(format!(
            "closed forms exist only for R = x - I with unit weight, got model {}",
            model.name()
        )));
    }
    let times = &run.series.times;
    if run.profiles.len() != times.len() {
        return Err(Error::IncompatibleRuns(
            "run must store the phase profile at every sample".into(),
        ));
    }
    if run.profiles.iter().any(|p| p.len() != grid.n_cells()) {
        return Err(Error::IncompatibleRuns("profile length differs from the grid".into()));
    }
    let nodes = grid.nodes();
    let mut phi_errors = Vec::with_capacity(times.len());
    let mut rho_errors = Vec::with_capacity(times.len());
    for (m, &t) in times.iter().enumerate() {
        let err = run.profiles[m]
            .iter()
            .zip(nodes)
            .map(|(p, &x)| (p - two_bump(t, x, spec).phi).abs())
            .fold(0.0, f64::max);
        phi_errors.push(err);
        let rho = match two_bump(t, 0.0, spec).rho {
            OracleRho::Value(v) => (run.series.env[0][m] - v).abs(),
            OracleRho::OneSided { .. } => f64::NAN,
        };
        rho_errors.push(rho);
    }
    let max_phi_error = phi_errors.iter().copied().fold(0.0, f64::max);
    let final_rho_error = rho_errors.last().copied().unwrap_or(f64::NAN);

    let tbar = spec.jump_time();
    let (mut detected, mut one_sided, mut xjump) = (None, None, None);
    if tbar.is_finite() {
        let (env_det, arg_det) = jump_detectors(model, grid);
        let env_events = env_det.events(times, &run.series.env[0]);
        if let Some(e) = env_events
            .iter()
            .min_by(|a, b| (a.time() - tbar).abs().total_cmp(&(b.time() - tbar).abs()))
        {
            detected = Some(e.time());
            one_sided = Some((e.before, e.after));
        }
        let x_events = arg_det.events(times, &run.series.xbar_left);
        if let Some(e) = x_events
            .iter()
            .min_by(|a, b| (a.time() - tbar).abs().total_cmp(&(b.time() - tbar).abs()))
        {
            xjump = Some(e.size());
        }
    }
    Ok(OracleReport {
        times: times.clone(),
        phi_errors,
        rho_errors,
        max_phi_error,
        final_rho_error,
        jump_time_error: detected.map(|d| (d - tbar).abs()),
        detected_jump_time: detected,
        rho_one_sided: one_sided,
        xbar_jump_size: xjump,
    })
}

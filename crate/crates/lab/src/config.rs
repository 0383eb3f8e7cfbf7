//! Flat `key = value` experiment configs with dotted sections and `#`
//! comments.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use dirac_core::grid::Grid;
use dirac_core::hj::{
    HjConfig, DEFAULT_CFL, DEFAULT_THETA_MARGIN, DEFAULT_TOL_CONSTRAINT, DEFAULT_TOL_FLAT,
};
use dirac_core::init::{InitSpec, InitialPhase};
use dirac_core::model::{EnvBounds, GrowthModel};
use dirac_core::pde::PdeConfig;
use dirac_core::poly::{EnvResponse, PiecewisePoly};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{field}: {message}")]
    Field { field: String, message: String },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

fn field_err(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        field: field.to_string(),
        message: message.into(),
    }
}

/// Raw key-value pairs in file order of first appearance.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: k + 1,
                message: format!("expected 'key = value', got '{line}'"),
            })?;
            let key = key.trim();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(ConfigError::Syntax {
                    line: k + 1,
                    message: format!("invalid key '{key}'"),
                });
            }
            if entries.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(ConfigError::Syntax {
                    line: k + 1,
                    message: format!("duplicate key '{key}'"),
                });
            }
        }
        Ok(Self { entries })
    }

    pub fn read(path: &Path) -> Result<(Self, Vec<u8>), ConfigError> {
        let bytes = std::fs::read(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let text = String::from_utf8(bytes.clone()).map_err(|_| ConfigError::Io {
            path: path.display().to_string(),
            message: "not UTF-8".into(),
        })?;
        Ok((Self::parse(&text)?, bytes))
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }
}

/// Tracks which keys were read so leftovers can be reported as typos.
struct Reader<'a> {
    raw: &'a RawConfig,
    used: std::cell::RefCell<Vec<String>>,
}

impl<'a> Reader<'a> {
    fn new(raw: &'a RawConfig) -> Self {
        Self {
            raw,
            used: Default::default(),
        }
    }

    fn str(&self, key: &str) -> Option<&'a str> {
        self.used.borrow_mut().push(key.to_string());
        self.raw.get(key)
    }

    fn req_str(&self, key: &str) -> Result<&'a str, ConfigError> {
        self.str(key).ok_or_else(|| field_err(key, "required"))
    }

    fn f64(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.str(key) {
            None => Ok(None),
            Some(v) => {
                let x: f64 = v
                    .parse()
                    .map_err(|_| field_err(key, format!("'{v}' is not a number")))?;
                if !x.is_finite() {
                    return Err(field_err(key, "must be finite"));
                }
                Ok(Some(x))
            }
        }
    }

    fn req_f64(&self, key: &str) -> Result<f64, ConfigError> {
        self.f64(key)?.ok_or_else(|| field_err(key, "required"))
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        match self.str(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| field_err(key, format!("'{v}' is not a nonnegative integer"))),
        }
    }

    fn bool_or(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.str(key) {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(v) => Err(field_err(key, format!("'{v}' is not true or false"))),
        }
    }

    fn list(&self, key: &str) -> Result<Vec<f64>, ConfigError> {
        match self.str(key) {
            None => Ok(Vec::new()),
            Some(v) => v
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| field_err(key, format!("'{tok}' is not a finite number")))
                })
                .collect(),
        }
    }

    fn poly(&self, key: &str, default: Option<&str>) -> Result<PiecewisePoly, ConfigError> {
        let text = match (self.str(key), default) {
            (Some(v), _) => v,
            (None, Some(d)) => d,
            (None, None) => return Err(field_err(key, "required")),
        };
        PiecewisePoly::parse(text).map_err(|e| field_err(key, e.to_string()))
    }

    fn response(&self, key: &str) -> Result<EnvResponse, ConfigError> {
        EnvResponse::parse(self.req_str(key)?).map_err(|e| field_err(key, e.to_string()))
    }

    fn unused(&self) -> Vec<String> {
        let used = self.used.borrow();
        self.raw
            .entries
            .keys()
            .filter(|k| !used.contains(k))
            .cloned()
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Pde,
    Hj,
    HjEps,
    PdeMulti,
}

impl SolverKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolverKind::Pde => "pde",
            SolverKind::Hj => "hj",
            SolverKind::HjEps => "hj_eps",
            SolverKind::PdeMulti => "pde_multi",
        }
    }

    pub fn is_parabolic(&self) -> bool {
        matches!(self, SolverKind::Pde | SolverKind::PdeMulti)
    }
}

/// Thresholds for `oracle-check`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleTolerances {
    pub phi: f64,
    pub rho: f64,
    /// `None` means `dt + dx` of the run.
    pub jump_time: Option<f64>,
    pub one_sided: f64,
    pub xbar_jump: f64,
}

impl Default for OracleTolerances {
    fn default() -> Self {
        Self {
            phi: 0.02,
            rho: 0.01,
            jump_time: None,
            one_sided: 0.02,
            xbar_jump: 0.02,
        }
    }
}

/// Validated experiment description. `entries` holds every resolved
/// setting, defaults included, in config grammar.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub run_id: String,
    pub output_dir: PathBuf,
    pub model: GrowthModel,
    pub grid: Grid,
    pub solver: SolverKind,
    pub eps: Option<f64>,
    pub t_final: f64,
    pub sample_every: usize,
    pub snapshots: Vec<f64>,
    pub dt_scale: f64,
    pub init: InitSpec,
    pub well_prepared: bool,
    pub mass_scale: f64,
    pub abort_on_boundary_mass: bool,
    pub store_profiles: bool,
    pub cfl: f64,
    pub theta_margin: f64,
    pub tol_constraint: f64,
    pub tol_flat: f64,
    pub dt_max: Option<f64>,
    pub lipschitz_guard_factor: f64,
    pub oracle: OracleTolerances,
    pub entries: Vec<(String, String)>,
}

const MODEL_NAMES: &str = "linear, polynomial_switch, concave, factored, chemostat";

impl ExperimentConfig {
    pub fn from_raw(raw: &RawConfig, default_id: &str) -> Result<Self, ConfigError> {
        let r = Reader::new(raw);
        let mut entries: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, v: String| entries.push((k.to_string(), v));

        let run_id = r.str("run.id").unwrap_or(default_id).to_string();
        if run_id.is_empty() || run_id.contains(['/', '\\']) || run_id.starts_with('.') {
            return Err(field_err("run.id", format!("'{run_id}' is not a valid directory name")));
        }
        put("run.id", run_id.clone());
        let output_dir = PathBuf::from(r.str("output.dir").unwrap_or("out"));
        put("output.dir", output_dir.display().to_string());

        let x_min = r.req_f64("grid.x_min")?;
        let x_max = r.req_f64("grid.x_max")?;
        let n_cells = r.usize_or("grid.n_cells", 0)?;
        if r.raw.get("grid.n_cells").is_none() {
            return Err(field_err("grid.n_cells", "required"));
        }
        if !(x_min < x_max) {
            return Err(field_err("grid.x_max", "must exceed grid.x_min"));
        }
        let grid = Grid::new(x_min, x_max, n_cells).map_err(|e| field_err("grid.n_cells", e.to_string()))?;
        put("grid.x_min", x_min.to_string());
        put("grid.x_max", x_max.to_string());
        put("grid.n_cells", n_cells.to_string());

        let solver = match r.req_str("solver")? {
            "pde" => SolverKind::Pde,
            "hj" => SolverKind::Hj,
            "hj_eps" => SolverKind::HjEps,
            "pde_multi" => SolverKind::PdeMulti,
            other => {
                return Err(field_err(
                    "solver",
                    format!("'{other}' is not one of pde, hj, hj_eps, pde_multi"),
                ))
            }
        };
        put("solver", solver.as_str().into());

        let eps = r.f64("eps")?;
        if solver != SolverKind::Hj {
            let e = eps.ok_or_else(|| field_err("eps", format!("required for solver {}", solver.as_str())))?;
            if e <= 0.0 {
                return Err(field_err("eps", "must be positive"));
            }
        }
        if let Some(e) = eps {
            put("eps", e.to_string());
        }

        let t_final = r.req_f64("time.t_final")?;
        if t_final <= 0.0 {
            return Err(field_err("time.t_final", "must be positive"));
        }
        let sample_every = r.usize_or("time.sample_every", 1)?;
        if sample_every == 0 {
            return Err(field_err("time.sample_every", "must be at least 1"));
        }
        let mut snapshots = r.list("time.snapshots")?;
        if r.raw.get("time.snapshots").is_none() {
            snapshots = vec![0.0, t_final];
        }
        if snapshots.iter().any(|&t| t < 0.0 || t > t_final) {
            return Err(field_err("time.snapshots", "times must lie in [0, time.t_final]"));
        }
        let dt_scale = r.f64_or("time.dt_scale", 1.0)?;
        if !(dt_scale > 0.0 && dt_scale <= 1.0) {
            return Err(field_err("time.dt_scale", "must lie in (0, 1]"));
        }
        put("time.t_final", t_final.to_string());
        put("time.sample_every", sample_every.to_string());
        put("time.snapshots", join(&snapshots));
        put("time.dt_scale", dt_scale.to_string());

        let env_count = r.usize_or("env.count", 1)?;
        if env_count == 0 {
            return Err(field_err("env.count", "must be at least 1"));
        }
        put("env.count", env_count.to_string());
        let model = read_model(&r, (x_min, x_max), env_count, &mut put)?;
        if model.env_count() != env_count {
            return Err(field_err(
                "env.count",
                format!("model {} has {} environment component(s)", model.name(), model.env_count()),
            ));
        }
        if env_count > 1 && solver != SolverKind::PdeMulti {
            return Err(field_err(
                "solver",
                format!("{} supports a single environment; use pde_multi", solver.as_str()),
            ));
        }

        let init = read_init(&r, &mut put)?;
        let well_prepared = r.bool_or("init.well_prepared", true)?;
        let mass_scale = r.f64_or("init.mass_scale", 1.0)?;
        if mass_scale <= 0.0 {
            return Err(field_err("init.mass_scale", "must be positive"));
        }
        put("init.well_prepared", well_prepared.to_string());
        put("init.mass_scale", mass_scale.to_string());

        let abort_on_boundary_mass = r.bool_or("pde.abort_on_boundary_mass", false)?;
        let store_profiles = r.bool_or("output.profiles", false)?;
        put("pde.abort_on_boundary_mass", abort_on_boundary_mass.to_string());
        put("output.profiles", store_profiles.to_string());

        let cfl = r.f64_or("hj.cfl", DEFAULT_CFL)?;
        if !(cfl > 0.0 && cfl <= 0.5) {
            return Err(field_err("hj.cfl", "must lie in (0, 0.5]"));
        }
        let theta_margin = r.f64_or("hj.theta_margin", DEFAULT_THETA_MARGIN)?;
        if theta_margin < 0.0 {
            return Err(field_err("hj.theta_margin", "must be nonnegative"));
        }
        let tol_constraint = r.f64_or("tol.constraint", DEFAULT_TOL_CONSTRAINT)?;
        let tol_flat = r.f64_or("tol.flat", DEFAULT_TOL_FLAT)?;
        for (key, v) in [("tol.constraint", tol_constraint), ("tol.flat", tol_flat)] {
            if v <= 0.0 {
                return Err(field_err(key, "must be positive"));
            }
        }
        let dt_max = r.f64("hj.dt_max")?;
        if dt_max.is_some_and(|d| d <= 0.0) {
            return Err(field_err("hj.dt_max", "must be positive"));
        }
        let lipschitz_guard_factor = r.f64_or("hj.lipschitz_guard_factor", 10.0)?;
        put("hj.cfl", cfl.to_string());
        put("hj.theta_margin", theta_margin.to_string());
        put("tol.constraint", tol_constraint.to_string());
        put("tol.flat", tol_flat.to_string());
        if let Some(d) = dt_max {
            put("hj.dt_max", d.to_string());
        }
        put("hj.lipschitz_guard_factor", lipschitz_guard_factor.to_string());

        let defaults = OracleTolerances::default();
        let oracle = OracleTolerances {
            phi: r.f64_or("oracle.max_phi_error", defaults.phi)?,
            rho: r.f64_or("oracle.max_rho_error", defaults.rho)?,
            jump_time: r.f64("oracle.max_jump_time_error")?,
            one_sided: r.f64_or("oracle.max_one_sided_error", defaults.one_sided)?,
            xbar_jump: r.f64_or("oracle.max_xbar_jump_error", defaults.xbar_jump)?,
        };
        put("oracle.max_phi_error", oracle.phi.to_string());
        put("oracle.max_rho_error", oracle.rho.to_string());
        if let Some(j) = oracle.jump_time {
            put("oracle.max_jump_time_error", j.to_string());
        }
        put("oracle.max_one_sided_error", oracle.one_sided.to_string());
        put("oracle.max_xbar_jump_error", oracle.xbar_jump.to_string());

        let unused = r.unused();
        if let Some(key) = unused.first() {
            return Err(field_err(key, "unknown key"));
        }

        Ok(Self {
            run_id,
            output_dir,
            model,
            grid,
            solver,
            eps,
            t_final,
            sample_every,
            snapshots,
            dt_scale,
            init,
            well_prepared,
            mass_scale,
            abort_on_boundary_mass,
            store_profiles,
            cfl,
            theta_margin,
            tol_constraint,
            tol_flat,
            dt_max,
            lipschitz_guard_factor,
            oracle,
            entries,
        })
    }

    pub fn from_text(text: &str, default_id: &str) -> Result<Self, ConfigError> {
        Self::from_raw(&RawConfig::parse(text)?, default_id)
    }

    /// Resolved settings as config text; parsing it yields the same run.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn pde_config(&self) -> PdeConfig {
        let mut c = PdeConfig::new(self.eps.unwrap_or(0.0), self.t_final, self.init.clone());
        c.dt_scale = self.dt_scale;
        c.sample_every = self.sample_every;
        c.snapshot_times = self.snapshots.clone();
        c.well_prepared = self.well_prepared;
        c.mass_scale = self.mass_scale;
        c.abort_on_boundary_mass = self.abort_on_boundary_mass;
        c.store_profiles = self.store_profiles;
        c
    }

    pub fn hj_config(&self) -> HjConfig {
        let mut c = match self.solver {
            SolverKind::HjEps => HjConfig::viscous(self.t_final, self.eps.unwrap_or(0.0), self.init.clone()),
            _ => HjConfig::new(self.t_final, self.init.clone()),
        };
        c.cfl = self.cfl * self.dt_scale;
        c.theta_margin = self.theta_margin;
        c.tol_constraint = self.tol_constraint;
        c.tol_flat = self.tol_flat;
        c.snapshot_times = self.snapshots.clone();
        c.dt_max = self.dt_max;
        c.well_prepared = self.well_prepared;
        c.sample_every = self.sample_every;
        c.store_profiles = self.store_profiles;
        c.lipschitz_guard_factor = self.lipschitz_guard_factor;
        c
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(" ")
}

fn read_model(
    r: &Reader,
    domain: (f64, f64),
    env_count: usize,
    put: &mut impl FnMut(&str, String),
) -> Result<GrowthModel, ConfigError> {
    let name = r.req_str("model.name")?;
    put("model.name", name.into());
    let lo = r.f64("model.i_min")?;
    let hi = r.f64("model.i_max")?;
    let bounds = match (lo, hi) {
        (Some(lower), Some(upper)) => Some(EnvBounds { lower, upper }),
        (None, None) => None,
        (Some(_), None) => return Err(field_err("model.i_max", "required with model.i_min")),
        (None, Some(_)) => return Err(field_err("model.i_min", "required with model.i_max")),
    };
    let window = match (r.f64("model.window_lo")?, r.f64("model.window_hi")?) {
        (Some(a), Some(b)) => Some((a, b)),
        (None, None) => None,
        _ => return Err(field_err("model.window_lo", "model.window_lo and model.window_hi go together")),
    };
    let to_field = |key: &'static str| move |e: dirac_core::Error| field_err(key, e.to_string());
    let model = match name {
        "linear" => GrowthModel::linear(domain).map_err(to_field("model.name"))?,
        "polynomial_switch" => GrowthModel::polynomial_switch(domain).map_err(to_field("model.name"))?,
        "concave" => GrowthModel::concave(domain).map_err(to_field("model.name"))?,
        "factored" => {
            let b = r.poly("model.b", None)?;
            let d = r.poly("model.d", None)?;
            let q1 = r.response("model.q1")?;
            let q2 = r.response("model.q2")?;
            let psi = r.poly("env.psi_1", Some("1"))?;
            for key in ["model.b", "model.d", "model.q1", "model.q2"] {
                put(key, r.raw.get(key).unwrap_or_default().into());
            }
            put("env.psi_1", r.raw.get("env.psi_1").unwrap_or("1").into());
            GrowthModel::factored(b, d, q1, q2, psi, domain, bounds, window).map_err(to_field("model.name"))?
        }
        "chemostat" => {
            let mut births = Vec::new();
            let mut responses = Vec::new();
            let mut psi = Vec::new();
            for k in 1..=env_count {
                let (bk, qk, pk) = (format!("model.b_{k}"), format!("model.q_{k}"), format!("env.psi_{k}"));
                births.push(r.poly(&bk, None)?);
                responses.push(r.response(&qk)?);
                psi.push(r.poly(&pk, Some("1"))?);
                put(&bk, r.raw.get(&bk).unwrap_or_default().into());
                put(&qk, r.raw.get(&qk).unwrap_or_default().into());
                put(&pk, r.raw.get(&pk).unwrap_or("1").into());
            }
            let death = r.poly("model.d", None)?;
            put("model.d", r.raw.get("model.d").unwrap_or_default().into());
            GrowthModel::chemostat(births, responses, death, psi, domain, bounds, window)
                .map_err(to_field("model.name"))?
        }
        other => {
            return Err(field_err(
                "model.name",
                format!("'{other}' is not one of {MODEL_NAMES}"),
            ))
        }
    };
    if let Some(b) = bounds {
        put("model.i_min", b.lower.to_string());
        put("model.i_max", b.upper.to_string());
    }
    if let Some((a, b)) = window {
        put("model.window_lo", a.to_string());
        put("model.window_hi", b.to_string());
    }
    Ok(model)
}

fn read_init(r: &Reader, put: &mut impl FnMut(&str, String)) -> Result<InitSpec, ConfigError> {
    let kind = r.req_str("init.phase")?;
    put("init.phase", kind.into());
    let phase = match kind {
        "parabola" | "kink" => {
            let center = r.f64_or("init.center", 0.0)?;
            put("init.center", center.to_string());
            if kind == "parabola" {
                InitialPhase::Parabola { center }
            } else {
                InitialPhase::Kink { center }
            }
        }
        "two_bump" => {
            let alpha = r.req_f64("init.alpha")?;
            let delta = r.req_f64("init.delta")?;
            put("init.alpha", alpha.to_string());
            put("init.delta", delta.to_string());
            InitialPhase::TwoBump { alpha, delta }
        }
        "table" => {
            let xs = r.list("init.xs")?;
            let phis = r.list("init.phis")?;
            put("init.xs", join(&xs));
            put("init.phis", join(&phis));
            InitialPhase::table(xs, phis).map_err(|e| field_err("init.xs", e.to_string()))?
        }
        other => {
            return Err(field_err(
                "init.phase",
                format!("'{other}' is not one of parabola, kink, two_bump, table"),
            ))
        }
    };
    let mut spec = InitSpec::new(phase);
    let amp = r.f64("init.perturbation_amplitude")?;
    let wave = r.f64("init.perturbation_wavenumber")?;
    match (amp, wave) {
        (Some(a), Some(w)) => {
            put("init.perturbation_amplitude", a.to_string());
            put("init.perturbation_wavenumber", w.to_string());
            spec = spec.with_perturbation(a, w);
        }
        (None, None) => {}
        _ => {
            return Err(field_err(
                "init.perturbation_amplitude",
                "amplitude and wavenumber go together",
            ))
        }
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "\
model.name = linear
grid.x_min = -1
grid.x_max = 4
grid.n_cells = 100
time.t_final = 1
solver = hj
init.phase = parabola  # centered
";

    #[test]
    fn parses_minimal_config() {
        let c = ExperimentConfig::from_text(BASE, "base").unwrap();
        assert_eq!(c.run_id, "base");
        assert_eq!(c.solver, SolverKind::Hj);
        assert_eq!(c.grid.n_cells(), 100);
        assert_eq!(c.snapshots, vec![0.0, 1.0]);
    }

    #[test]
    fn resolved_text_round_trips() {
        let c = ExperimentConfig::from_text(BASE, "base").unwrap();
        let again = ExperimentConfig::from_text(&c.to_text(), "other").unwrap();
        assert_eq!(c.entries, again.entries);
    }

    #[test]
    fn missing_eps_names_field() {
        let text = BASE.replace("solver = hj", "solver = pde");
        let err = ExperimentConfig::from_text(&text, "x").unwrap_err();
        assert_eq!(err, field_err("eps", "required for solver pde"));
    }

    #[test]
    fn unknown_key_is_rejected() {
        let text = format!("{BASE}grid.ncells = 3\n");
        let err = ExperimentConfig::from_text(&text, "x").unwrap_err();
        assert!(matches!(err, ConfigError::Field { ref field, .. } if field == "grid.ncells"));
    }

    #[test]
    fn syntax_errors_carry_line() {
        let err = RawConfig::parse("a = 1\nbroken line\n").unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { line: 2, .. }));
        let err = RawConfig::parse("a = 1\na = 2\n").unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { line: 2, .. }));
    }

    #[test]
    fn nonfinite_and_bad_values() {
        let text = BASE.replace("grid.x_max = 4", "grid.x_max = inf");
        let err = ExperimentConfig::from_text(&text, "x").unwrap_err();
        assert!(matches!(err, ConfigError::Field { ref field, .. } if field == "grid.x_max"));
        let text = BASE.replace("solver = hj", "solver = spectral");
        assert!(ExperimentConfig::from_text(&text, "x").is_err());
    }

    #[test]
    fn multi_env_needs_pde_multi() {
        let text = "\
model.name = chemostat
env.count = 2
model.b_1 = 1 0.5
model.b_2 = 1 -0.5
model.q_1 = recip:1,1
model.q_2 = recip:1,1
model.d = 0.5
grid.x_min = -1
grid.x_max = 1
grid.n_cells = 50
time.t_final = 0.1
solver = pde
eps = 0.05
init.phase = parabola
";
        let err = ExperimentConfig::from_text(text, "x").unwrap_err();
        assert!(matches!(err, ConfigError::Field { ref field, .. } if field == "solver"));
        let ok = ExperimentConfig::from_text(&text.replace("solver = pde", "solver = pde_multi"), "x").unwrap();
        assert_eq!(ok.model.env_count(), 2);
    }
}

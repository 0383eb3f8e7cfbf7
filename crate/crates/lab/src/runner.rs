//! Dispatches a validated config to a solver and writes the run directory:
//! `manifest.txt`, `timeseries.csv`, `snapshot_*.csv` and `report.txt`.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use dirac_core::diagnostics::{
    check_j_decay, check_rsquare_bound, env_decrease_window, estimate_j_constants, estimate_rbar, jump_detectors,
    kv_text, monotonicity_and_ordering, residual_away_from_jumps, semiconvexity_check,
};
use dirac_core::hj::{run_constrained_hj, uniqueness_label, HjRun};
use dirac_core::model::MonomorphicStructure;
use dirac_core::multi_env::{check_bounds_multi, run_pde_multi};
use dirac_core::pde::{inverse_hopf_cole, run_pde, PdeRun};
use dirac_core::series::{JumpEvent, TimeSeries};
use dirac_core::Error;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig, SolverKind};
use crate::csvout::{self, CsvWriter};

pub const EXIT_OK: i32 = 0;
pub const EXIT_TOLERANCE: i32 = 1;
pub const EXIT_REGIME: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

/// Start of the window checked by the semiconvexity bound.
pub const SEMICONVEXITY_T_MIN: f64 = 0.05;
/// Samples excluded on each side of a detected jump by the residual check.
pub const RESIDUAL_RADIUS: usize = 5;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Solver(Error),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("tolerance failure: {0}")]
    Tolerance(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            RunError::Solver(Error::Invalid(_) | Error::ModelMismatch(_)) => EXIT_CONFIG,
            RunError::Solver(_) | RunError::Io(_) => EXIT_REGIME,
            RunError::Tolerance(_) => EXIT_TOLERANCE,
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Solver(e)
    }
}

#[derive(Debug, Clone)]
pub enum SolverRun {
    Pde(PdeRun),
    Hj(HjRun),
}

impl SolverRun {
    pub fn series(&self) -> &TimeSeries {
        match self {
            SolverRun::Pde(r) => &r.series,
            SolverRun::Hj(r) => &r.series,
        }
    }

    /// Phase profiles `phi` at every sample when requested.
    pub fn profiles(&self) -> &[Vec<f64>] {
        match self {
            SolverRun::Pde(r) => &r.profiles,
            SolverRun::Hj(r) => &r.profiles,
        }
    }

    pub fn dt_max(&self) -> f64 {
        match self {
            SolverRun::Pde(r) => r.dt,
            SolverRun::Hj(r) => r.dt_max,
        }
    }

    pub fn steps(&self) -> usize {
        match self {
            SolverRun::Pde(r) => r.steps,
            SolverRun::Hj(r) => r.steps(),
        }
    }
}

pub fn execute(cfg: &ExperimentConfig) -> Result<SolverRun, Error> {
    match cfg.solver {
        SolverKind::Pde => Ok(SolverRun::Pde(run_pde(&cfg.model, &cfg.grid, &cfg.pde_config())?)),
        SolverKind::PdeMulti => Ok(SolverRun::Pde(run_pde_multi(&cfg.model, &cfg.grid, &cfg.pde_config())?)),
        SolverKind::Hj | SolverKind::HjEps => {
            Ok(SolverRun::Hj(run_constrained_hj(&cfg.model, &cfg.grid, &cfg.hj_config())?))
        }
    }
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let digest = Sha256::digest(cfg.to_text().as_bytes());
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Env and argmax jump events of a finished run.
pub fn detected_jumps(cfg: &ExperimentConfig, series: &TimeSeries) -> (Vec<JumpEvent>, Vec<JumpEvent>) {
    let (env_det, arg_det) = jump_detectors(&cfg.model, &cfg.grid);
    (
        env_det.events(&series.times, &series.env[0]),
        arg_det.events(&series.times, &series.xbar_left),
    )
}

/// Diagnostics lines and the pass flags they imply.
pub struct Report {
    pub lines: Vec<(String, String)>,
    pub failed: Vec<String>,
}

impl Report {
    fn new() -> Self {
        Self {
            lines: Vec::new(),
            failed: Vec::new(),
        }
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.lines.push((key.to_string(), value.to_string()));
    }

    pub fn check(&mut self, name: &str, passed: bool) {
        self.push(&format!("check.{name}"), if passed { "pass" } else { "fail" });
        if !passed {
            self.failed.push(name.to_string());
        }
    }

    fn extend_text(&mut self, text: &str) {
        for line in text.lines() {
            if let Some((k, v)) = line.split_once(": ") {
                self.push(k, v);
            }
        }
    }

    pub fn to_text(&self) -> String {
        let pairs: Vec<(&str, String)> = self.lines.iter().map(|(k, v)| (k.as_str(), v.clone())).collect();
        let mut out = kv_text(&pairs);
        let status = if self.failed.is_empty() { "pass" } else { "fail" };
        let _ = writeln!(out, "status: {status}");
        out
    }
}

/// Semiconvexity slack covering the O(dx + dt) consistency error of the
/// discrete second difference.
pub fn semiconvexity_slack(dx: f64, dt: f64, rbar: f64) -> f64 {
    5.0 * (dx + dt) * (1.0 + (rbar / 2.0).sqrt())
}

pub fn diagnostics(cfg: &ExperimentConfig, run: &SolverRun) -> Report {
    let mut rep = Report::new();
    let s = run.series();
    rep.push("samples", s.len());
    rep.push("steps", run.steps());
    for (k, col) in s.env.iter().enumerate() {
        rep.push(&format!("final.I_{}", k + 1), csvout::g17(*col.last().unwrap_or(&f64::NAN)));
    }
    rep.push("final.xbar_left", csvout::g17(*s.xbar_left.last().unwrap_or(&f64::NAN)));
    let (env_jumps, arg_jumps) = detected_jumps(cfg, s);
    let times = |ev: &[JumpEvent]| ev.iter().map(|e| csvout::g17(e.time())).collect::<Vec<_>>().join(" ");
    rep.push("jumps.env", env_jumps.len());
    rep.push("jumps.env_times", times(&env_jumps));
    rep.push("jumps.argmax", arg_jumps.len());
    rep.push("jumps.argmax_times", times(&arg_jumps));

    let structure = if cfg.model.env_count() == 1 {
        MonomorphicStructure::detect(&cfg.model, 9).ok()
    } else {
        None
    };
    let (_, arg_det) = jump_detectors(&cfg.model, &cfg.grid);

    match run {
        SolverRun::Pde(r) => {
            for w in &r.warnings {
                rep.push("warning", w);
            }
            rep.extend_text(&check_rsquare_bound(r).to_text());
            let jc = estimate_j_constants(r);
            let jd = check_j_decay(&r.series, r.eps, jc.k1, jc.k2, 0.0);
            rep.extend_text(&jd.to_text());
            rep.check("j_decay", jd.passed);
            let bounds = check_bounds_multi(&r.series, cfg.model.bounds(), r.eps);
            rep.extend_text(&bounds.to_text());
            let window = env_decrease_window(&r.series, 10.0 * r.eps);
            rep.push(
                "env.decrease_window",
                window.map_or("none".into(), |(a, b)| format!("{} {}", csvout::g17(a), csvout::g17(b))),
            );
            if cfg.well_prepared {
                rep.check("env_nondecreasing", window.is_none());
            }
            if let Some(st) = &structure {
                let ord = monotonicity_and_ordering(&r.series, st, 10.0 * r.eps, cfg.grid.dx(), &arg_det);
                rep.extend_text(&ord.to_text());
            }
        }
        SolverRun::Hj(r) => {
            rep.push("uniqueness", r.uniqueness);
            rep.push("dt_min", csvout::g17(r.dt_min));
            rep.push("dt_max", csvout::g17(r.dt_max));
            if cfg.solver == SolverKind::Hj {
                rep.push("constraint.worst_residual", format!("{:e}", r.worst_constraint_residual));
                rep.check("constraint", r.worst_constraint_residual <= cfg.tol_constraint);
                let (lo, hi) = cfg.model.window();
                let rbar = estimate_rbar(&cfg.model, &cfg.grid, lo, hi, 41);
                let slack = semiconvexity_slack(cfg.grid.dx(), r.dt_max, rbar);
                let sc = semiconvexity_check(&s.times, &s.min_second_diff, rbar, SEMICONVEXITY_T_MIN, slack);
                rep.extend_text(&sc.to_text());
                rep.check("semiconvexity", sc.passed);
                let (worst, used) = residual_away_from_jumps(s, &cfg.model, RESIDUAL_RADIUS, 0.0);
                rep.push("residual.worst", format!("{worst:e}"));
                rep.push("residual.samples", used);
                rep.push("residual.constant", csvout::g17(worst / (cfg.grid.dx() + r.dt_max)));
                if let Some(st) = &structure {
                    let ord = monotonicity_and_ordering(s, st, 0.0, cfg.grid.dx(), &arg_det);
                    rep.extend_text(&ord.to_text());
                }
            }
        }
    }
    rep
}

pub fn run_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output_dir.join(&cfg.run_id)
}

/// Creates the run directory, removing CSVs left by an earlier run.
pub fn prepare_dir(dir: &Path) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "csv") {
            std::fs::remove_file(path)?;
        }
    }
    Ok(())
}

pub fn write_manifest(dir: &Path, cfg: &ExperimentConfig, run: &SolverRun) -> io::Result<()> {
    let mut out = cfg.to_text();
    let (lo, hi) = cfg.model.window();
    let b = cfg.model.bounds();
    let mut put = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    put("derived.version", env!("CARGO_PKG_VERSION").into());
    put("derived.config_sha256", config_hash(cfg));
    put("derived.model.form", cfg.model.form().as_str().into());
    put("derived.model.i_m", csvout::g17(b.lower));
    put("derived.model.i_M", csvout::g17(b.upper));
    put("derived.model.window", format!("{} {}", csvout::g17(lo), csvout::g17(hi)));
    put("derived.model.k_estimate", csvout::g17(cfg.model.lipschitz_budget()));
    put("derived.grid.dx", csvout::g17(cfg.grid.dx()));
    put("derived.steps", run.steps().to_string());
    match run {
        SolverRun::Pde(r) => {
            put("derived.dt", csvout::g17(r.dt));
            put("derived.initial_scale", csvout::g17(r.initial_scale));
        }
        SolverRun::Hj(r) => {
            put("derived.dt_min", csvout::g17(r.dt_min));
            put("derived.dt_max", csvout::g17(r.dt_max));
            put("derived.uniqueness", r.uniqueness.into());
        }
    }
    if !matches!(run, SolverRun::Hj(_)) {
        put("derived.uniqueness", uniqueness_label(&cfg.model).into());
    }
    std::fs::write(dir.join("manifest.txt"), out)
}

pub fn write_outputs(dir: &Path, cfg: &ExperimentConfig, run: &SolverRun) -> io::Result<()> {
    let nodes = cfg.grid.nodes();
    csvout::write_timeseries(&dir.join("timeseries.csv"), run.series())?;
    match run {
        SolverRun::Pde(r) => {
            for snap in &r.snapshots {
                csvout::write_snapshot(dir, snap.t, "n", nodes, &snap.values)?;
            }
            let mut w = CsvWriter::create(
                &dir.join("dissipation.csv"),
                &csvout::header(&["t", "r2_cumulative", "k1_term", "k2_term"]),
            )?;
            for m in 0..r.series.len() {
                w.numbers(&[r.series.times[m], r.r2_cumulative[m], r.k1_terms[m], r.k2_terms[m]])?;
            }
            w.finish()?;
            if !r.profiles.is_empty() {
                let density: Vec<Vec<f64>> = r.profiles.iter().map(|p| inverse_hopf_cole(p, r.eps)).collect();
                csvout::write_field(&dir.join("density.csv"), "n", &r.series.times, nodes, &density)?;
            }
        }
        SolverRun::Hj(r) => {
            for snap in &r.snapshots {
                csvout::write_snapshot(dir, snap.t, "phi", nodes, &snap.values)?;
            }
        }
    }
    if !run.profiles().is_empty() {
        csvout::write_field(&dir.join("phase.csv"), "phi", &run.series().times, nodes, run.profiles())?;
    }
    Ok(())
}

pub struct RunOutcome {
    pub dir: PathBuf,
    pub run: SolverRun,
    pub report: Report,
}

/// Runs one config end to end. Diagnostics are recorded, not enforced.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome, RunError> {
    let run = execute(cfg)?;
    let dir = run_dir(cfg);
    prepare_dir(&dir)?;
    write_manifest(&dir, cfg, &run)?;
    write_outputs(&dir, cfg, &run)?;
    let report = diagnostics(cfg, &run);
    std::fs::write(dir.join("report.txt"), report.to_text())?;
    Ok(RunOutcome { dir, run, report })
}

//! Named experiments: closed-form comparison, the discontinuous-multiplier
//! reproduction and parameter sweeps.

use std::path::{Path, PathBuf};

use dirac_core::init::InitialPhase;
use dirac_core::oracle::{oracle_error, two_bump, BumpSpec, OracleReport, OracleRho};
use dirac_core::series::JumpEvent;
use dirac_core::Error;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, RawConfig, SolverKind};
use crate::csvout::{self, g17, CsvWriter};
use crate::runner::{
    detected_jumps, diagnostics, execute, prepare_dir, write_manifest, write_outputs, RunError,
    SolverRun, EXIT_OK,
};

/// Closed-form data matching the configured initial phase.
pub fn bump_spec(cfg: &ExperimentConfig) -> Result<BumpSpec, Error> {
    match &cfg.init.phase {
        InitialPhase::Parabola { center } if *center == 0.0 => Ok(BumpSpec::single()),
        InitialPhase::TwoBump { alpha, delta } => BumpSpec::new(*alpha, *delta),
        _ => Err(Error::ModelMismatch(
            "closed forms need init.phase = parabola with center 0, or two_bump".into(),
        )),
    }
}

pub struct OracleOutcome {
    pub dir: PathBuf,
    pub report: OracleReport,
    pub dt: f64,
    pub dx: f64,
    /// One line per exceeded threshold.
    pub breaches: Vec<String>,
    pub lines: Vec<(String, String)>,
}

/// Runs the constrained solver with stored profiles and compares against
/// the closed form.
pub fn oracle_check(cfg: &ExperimentConfig) -> Result<OracleOutcome, RunError> {
    if cfg.solver != SolverKind::Hj {
        return Err(Error::ModelMismatch("oracle-check needs solver = hj".into()).into());
    }
    if !dirac_core::oracle::is_linear_model(&cfg.model) {
        return Err(Error::ModelMismatch(format!(
            "closed forms exist only for R = x - I with unit weight, got model {}",
            cfg.model.name()
        ))
        .into());
    }
    let spec = bump_spec(cfg)?;
    let mut cfg = cfg.clone();
    cfg.store_profiles = true;
    let run = execute(&cfg)?;
    let SolverRun::Hj(hj) = &run else {
        unreachable!("hj solver returns a phase run")
    };
    let report = oracle_error(hj, &cfg.model, &cfg.grid, &spec)?;
    let dt = hj.dt_max;
    let dx = cfg.grid.dx();
    let tol = cfg.oracle;

    let mut lines: Vec<(String, String)> = Vec::new();
    let mut breaches = Vec::new();
    let mut check = |name: &str, value: f64, limit: f64| {
        lines.push((format!("oracle.{name}"), g17(value)));
        lines.push((format!("oracle.{name}_limit"), g17(limit)));
        if !(value <= limit) {
            breaches.push(format!("{name} = {} exceeds {}", g17(value), g17(limit)));
        }
    };
    check("max_phi_error", report.max_phi_error, tol.phi);
    check("final_rho_error", report.final_rho_error, tol.rho);
    let tbar = spec.jump_time();
    if tbar.is_finite() && tbar < cfg.t_final {
        let limit = tol.jump_time.unwrap_or(dt + dx);
        check("jump_time_error", report.jump_time_error.unwrap_or(f64::INFINITY), limit);
        let (want_before, want_after) = match two_bump(tbar, 0.0, &spec).rho {
            OracleRho::OneSided { before, after } => (before, after),
            OracleRho::Value(v) => (v, v),
        };
        let (got_before, got_after) = report.rho_one_sided.unwrap_or((f64::NAN, f64::NAN));
        check("rho_before_error", (got_before - want_before).abs(), tol.one_sided);
        check("rho_after_error", (got_after - want_after).abs(), tol.one_sided);
        check(
            "xbar_jump_error",
            (report.xbar_jump_size.unwrap_or(f64::NAN) - spec.alpha).abs(),
            tol.xbar_jump,
        );
    }

    let dir = crate::runner::run_dir(&cfg);
    prepare_dir(&dir)?;
    write_manifest(&dir, &cfg, &run)?;
    write_outputs(&dir, &cfg, &run)?;
    let mut w = CsvWriter::create(&dir.join("oracle.csv"), &csvout::header(&["t", "phi_error", "rho_error"]))?;
    for m in 0..report.times.len() {
        w.numbers(&[report.times[m], report.phi_errors[m], report.rho_errors[m]])?;
    }
    w.finish()?;
    let mut text = diagnostics(&cfg, &run);
    for (k, v) in &lines {
        text.push(k, v);
    }
    for b in &breaches {
        text.push("breach", b);
    }
    text.check("oracle", breaches.is_empty());
    std::fs::write(dir.join("report.txt"), text.to_text())?;

    Ok(OracleOutcome {
        dir,
        report,
        dt,
        dx,
        breaches,
        lines,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fig1Model {
    PolynomialSwitch,
    Concave,
}

pub const FIG1_CELLS: usize = 500;

/// Canned config for the discontinuous-multiplier example.
pub fn fig1_config(model: Fig1Model, n_cells: usize, out: &Path, run_id: &str) -> ExperimentConfig {
    let name = match model {
        Fig1Model::PolynomialSwitch => "polynomial_switch",
        Fig1Model::Concave => "concave",
    };
    let text = format!(
        "run.id = {run_id}
output.dir = {}
output.profiles = true
model.name = {name}
grid.x_min = 0
grid.x_max = 1
grid.n_cells = {n_cells}
solver = pde
eps = 0.005
time.t_final = 0.4
time.sample_every = 5
time.snapshots =
init.phase = kink
init.center = 0.05
",
        out.display()
    );
    ExperimentConfig::from_text(&text, run_id).expect("canned config is valid")
}

pub struct Fig1Outcome {
    pub dir: PathBuf,
    pub times: Vec<f64>,
    pub env_events: Vec<JumpEvent>,
    pub argmax_events: Vec<JumpEvent>,
    /// First env event with an argmax event within the sample gap.
    pub common: Option<(JumpEvent, JumpEvent)>,
    /// Per-sample sup-norm change of `phi`.
    pub phi_changes: Vec<f64>,
    pub phi_change_median: f64,
    pub phi_change_near_jump: f64,
    pub smooth: bool,
    pub elapsed_steps: usize,
}

impl Fig1Outcome {
    pub fn passed(&self) -> bool {
        self.common.is_some() && self.smooth
    }
}

/// Samples allowed between the env and argmax events.
pub const COMMON_GAP: usize = 5;
/// Samples on each side of the jump scanned for the phase change.
pub const PHI_WINDOW: usize = 10;
pub const PHI_CHANGE_FACTOR: f64 = 5.0;

fn interval_gap(a: &JumpEvent, b: &JumpEvent) -> usize {
    if a.end < b.start {
        b.start - a.end
    } else {
        a.start.saturating_sub(b.end)
    }
}

pub fn common_jump(env: &[JumpEvent], argmax: &[JumpEvent], gap: usize) -> Option<(JumpEvent, JumpEvent)> {
    env.iter().find_map(|e| {
        argmax
            .iter()
            .find(|a| interval_gap(e, a) <= gap)
            .map(|a| (e.clone(), a.clone()))
    })
}

pub fn reproduce_fig1(model: Fig1Model, n_cells: usize, out: &Path, run_id: &str) -> Result<Fig1Outcome, RunError> {
    let cfg = fig1_config(model, n_cells, out, run_id);
    let run = execute(&cfg)?;
    let series = run.series();
    let (env_events, argmax_events) = detected_jumps(&cfg, series);
    let common = common_jump(&env_events, &argmax_events, COMMON_GAP);

    let profiles = run.profiles();
    let phi_changes: Vec<f64> = profiles
        .windows(2)
        .map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        .collect();
    let mut sorted = phi_changes.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted.get(sorted.len() / 2).copied().unwrap_or(0.0);
    let (lo, hi) = match &common {
        Some((e, a)) => (e.start.min(a.start), e.end.max(a.end)),
        None => (0, phi_changes.len()),
    };
    let lo = lo.saturating_sub(PHI_WINDOW);
    let hi = (hi + PHI_WINDOW).min(phi_changes.len());
    let near = phi_changes[lo..hi].iter().copied().fold(0.0, f64::max);
    let smooth = near <= PHI_CHANGE_FACTOR * median;

    let dir = crate::runner::run_dir(&cfg);
    prepare_dir(&dir)?;
    write_manifest(&dir, &cfg, &run)?;
    write_outputs(&dir, &cfg, &run)?;
    let nodes = cfg.grid.nodes();
    for m in (lo..=hi.min(profiles.len() - 1)).step_by(2) {
        csvout::write_snapshot(&dir, series.times[m], "phi", nodes, &profiles[m])?;
    }
    let mut rep = diagnostics(&cfg, &run);
    rep.push("fig1.common_jump_time", common.as_ref().map_or("none".into(), |(e, _)| g17(e.time())));
    rep.push("fig1.phi_change_median", g17(median));
    rep.push("fig1.phi_change_near_jump", g17(near));
    rep.check("fig1.common_jump", common.is_some());
    rep.check("fig1.smooth_phase", smooth);
    std::fs::write(dir.join("report.txt"), rep.to_text())?;

    Ok(Fig1Outcome {
        dir,
        times: series.times.clone(),
        env_events,
        argmax_events,
        common,
        phi_changes,
        phi_change_median: median,
        phi_change_near_jump: near,
        smooth,
        elapsed_steps: run.steps(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Eps,
    NCells,
    DtScale,
}

impl SweepParam {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "eps" => Some(SweepParam::Eps),
            "n_cells" => Some(SweepParam::NCells),
            "dt_scale" => Some(SweepParam::DtScale),
            _ => None,
        }
    }

    pub fn key(&self) -> &'static str {
        match self {
            SweepParam::Eps => "eps",
            SweepParam::NCells => "grid.n_cells",
            SweepParam::DtScale => "time.dt_scale",
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::Eps => "eps",
            SweepParam::NCells => "n_cells",
            SweepParam::DtScale => "dt_scale",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: String,
    pub run_id: String,
    pub exit_code: i32,
    pub message: String,
    pub final_env: Vec<f64>,
    pub env_jumps: usize,
    pub argmax_jumps: usize,
    pub rsquare_ratio: f64,
    pub bounds_normalized: f64,
    pub oracle_phi_error: f64,
    pub oracle_rho_error: f64,
}

impl SweepRow {
    fn failed(value: &str, run_id: String, err: &RunError) -> Self {
        Self {
            value: value.into(),
            run_id,
            exit_code: err.exit_code(),
            message: err.to_string(),
            final_env: Vec::new(),
            env_jumps: 0,
            argmax_jumps: 0,
            rsquare_ratio: f64::NAN,
            bounds_normalized: f64::NAN,
            oracle_phi_error: f64::NAN,
            oracle_rho_error: f64::NAN,
        }
    }
}

fn report_value(lines: &[(String, String)], key: &str) -> f64 {
    lines
        .iter()
        .find(|(k, _)| k == key)
        .and_then(|(_, v)| v.split_whitespace().map(|t| t.parse::<f64>().unwrap_or(f64::NAN)).reduce(f64::max))
        .unwrap_or(f64::NAN)
}

fn sweep_child(base: &RawConfig, base_id: &str, param: SweepParam, value: &str) -> SweepRow {
    let run_id = format!("{base_id}_{}_{value}", param.name());
    let mut raw = base.clone();
    raw.set(param.key(), value);
    raw.set("run.id", run_id.clone());
    let cfg = match ExperimentConfig::from_raw(&raw, &run_id) {
        Ok(c) => c,
        Err(e) => return SweepRow::failed(value, run_id, &e.into()),
    };
    let oracle_ready = cfg.solver == SolverKind::Hj
        && dirac_core::oracle::is_linear_model(&cfg.model)
        && bump_spec(&cfg).is_ok();
    let outcome = if oracle_ready {
        oracle_check(&cfg).map(|o| (o.dir, Some(o.report)))
    } else {
        crate::runner::run_experiment(&cfg).map(|o| (o.dir, None))
    };
    let (dir, oracle) = match outcome {
        Ok(v) => v,
        Err(e) => return SweepRow::failed(value, run_id, &e),
    };
    let text = std::fs::read_to_string(dir.join("report.txt")).unwrap_or_default();
    let all: Vec<(String, String)> = text
        .lines()
        .filter_map(|l| l.split_once(": ").map(|(k, v)| (k.to_string(), v.to_string())))
        .collect();
    let final_env = (1..=cfg.model.env_count())
        .map(|k| report_value(&all, &format!("final.I_{k}")))
        .collect();
    SweepRow {
        value: value.into(),
        run_id,
        exit_code: EXIT_OK,
        message: String::new(),
        final_env,
        env_jumps: report_value(&all, "jumps.env") as usize,
        argmax_jumps: report_value(&all, "jumps.argmax") as usize,
        rsquare_ratio: report_value(&all, "rsquare.ratio"),
        bounds_normalized: report_value(&all, "bounds.normalized"),
        oracle_phi_error: oracle.as_ref().map_or(f64::NAN, |r| r.max_phi_error),
        oracle_rho_error: oracle.as_ref().map_or(f64::NAN, |r| r.final_rho_error),
    }
}

pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub summary: PathBuf,
}

impl SweepOutcome {
    pub fn exit_code(&self) -> i32 {
        self.rows.iter().map(|r| r.exit_code).max().unwrap_or(EXIT_OK)
    }
}

/// Runs one child per value in parallel, then writes the summary once all
/// children have finished.
pub fn sweep(base: &RawConfig, base_id: &str, out_dir: &Path, param: SweepParam, values: &[String]) -> std::io::Result<SweepOutcome> {
    let rows: Vec<SweepRow> = values
        .par_iter()
        .map(|v| sweep_child(base, base_id, param, v))
        .collect();
    let n_env = rows.iter().map(|r| r.final_env.len()).max().unwrap_or(1).max(1);
    let dir = out_dir.join(format!("{base_id}_sweep_{}", param.name()));
    std::fs::create_dir_all(&dir)?;
    let summary = dir.join("summary.csv");
    let mut header = vec![param.name().to_string(), "run_id".into(), "exit_code".into()];
    header.extend((1..=n_env).map(|k| format!("final_I_{k}")));
    header.extend(
        [
            "env_jumps",
            "argmax_jumps",
            "rsquare_ratio",
            "bounds_normalized",
            "oracle_phi_error",
            "oracle_rho_error",
            "message",
        ]
        .map(String::from),
    );
    let mut w = CsvWriter::create(&summary, &header)?;
    for r in &rows {
        let mut cells = vec![r.value.clone(), r.run_id.clone(), r.exit_code.to_string()];
        cells.extend((0..n_env).map(|k| g17(r.final_env.get(k).copied().unwrap_or(f64::NAN))));
        cells.extend([
            r.env_jumps.to_string(),
            r.argmax_jumps.to_string(),
            g17(r.rsquare_ratio),
            g17(r.bounds_normalized),
            g17(r.oracle_phi_error),
            g17(r.oracle_rho_error),
            csv_quote(&r.message),
        ]);
        w.row(&cells)?;
    }
    w.finish()?;
    Ok(SweepOutcome { rows, summary })
}

fn csv_quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\"").replace('\n', " "))
    } else {
        s.to_string()
    }
}

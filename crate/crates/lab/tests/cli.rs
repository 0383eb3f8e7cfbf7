use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dirac-lab"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn lab(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Copies a shipped config with `edits` applied as `key = value` overrides.
fn write_config(dir: &Path, name: &str, base: &str, edits: &[(&str, &str)]) -> PathBuf {
    let text = std::fs::read_to_string(configs().join(base)).unwrap();
    let mut lines: Vec<String> = text
        .lines()
        .filter(|l| {
            let key = l.split('=').next().unwrap_or("").trim();
            !edits.iter().any(|(k, _)| *k == key)
        })
        .map(String::from)
        .collect();
    for (k, v) in edits {
        if !v.is_empty() {
            lines.push(format!("{k} = {v}"));
        }
    }
    let path = dir.join(name);
    std::fs::write(&path, lines.join("\n") + "\n").unwrap();
    path
}

fn out_arg(dir: &Path) -> String {
    dir.display().to_string()
}

#[test]
fn run_writes_contract_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "single.cfg", "linear_single.cfg", &[("grid.n_cells", "200")]);
    let o = lab(&["run", "--config", cfg.to_str().unwrap(), "--out", &out_arg(tmp.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let dir = tmp.path().join("single");
    let ts = std::fs::read_to_string(dir.join("timeseries.csv")).unwrap();
    assert_eq!(
        ts.lines().next().unwrap(),
        "t,I_1,rho,xbar_left,xbar_right,J,K,residual,lipschitz,min_second_diff,jump_flag"
    );
    assert!(!ts.contains('\r'));
    for t in ["0", "0.5", "1"] {
        let snap = std::fs::read_to_string(dir.join(format!("snapshot_{t}.csv"))).unwrap();
        assert!(snap.starts_with("x,phi\n"));
        assert_eq!(snap.lines().count(), 201);
    }
    let manifest = std::fs::read_to_string(dir.join("manifest.txt")).unwrap();
    for key in [
        "derived.config_sha256",
        "derived.model.i_m",
        "derived.model.i_M",
        "derived.model.k_estimate",
        "derived.version",
        "derived.uniqueness",
        "grid.n_cells = 200",
        "hj.cfl",
    ] {
        assert!(manifest.contains(key), "manifest lacks {key}");
    }
    let report = std::fs::read_to_string(dir.join("report.txt")).unwrap();
    assert!(report.contains("status: pass"), "{report}");
}

#[test]
fn manifest_config_reruns_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "a.cfg", "concave.cfg", &[("grid.n_cells", "100")]);
    let out = out_arg(tmp.path());
    assert!(lab(&["run", "--config", cfg.to_str().unwrap(), "--out", &out]).status.success());
    let manifest = std::fs::read_to_string(tmp.path().join("a/manifest.txt")).unwrap();
    let resolved: String = manifest
        .lines()
        .filter(|l| !l.starts_with("derived.") && !l.starts_with("run.id") && !l.starts_with("output.dir"))
        .map(|l| format!("{l}\n"))
        .collect();
    let again = tmp.path().join("b.cfg");
    std::fs::write(&again, resolved).unwrap();
    assert!(lab(&["run", "--config", again.to_str().unwrap(), "--out", &out]).status.success());
    let a = std::fs::read(tmp.path().join("a/timeseries.csv")).unwrap();
    let b = std::fs::read(tmp.path().join("b/timeseries.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn rerun_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "fac.cfg", "factored.cfg", &[("grid.n_cells", "100"), ("time.t_final", "0.2")]);
    let out = out_arg(tmp.path());
    let read_all = |dir: &Path| -> Vec<(String, Vec<u8>)> {
        let mut v: Vec<_> = std::fs::read_dir(dir)
            .unwrap()
            .map(|e| {
                let p = e.unwrap().path();
                (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
            })
            .collect();
        v.sort();
        v
    };
    assert!(lab(&["run", "--config", cfg.to_str().unwrap(), "--out", &out]).status.success());
    let first = read_all(&tmp.path().join("fac"));
    assert!(lab(&["run", "--config", cfg.to_str().unwrap(), "--out", &out]).status.success());
    let second = read_all(&tmp.path().join("fac"));
    assert_eq!(first, second);
    assert!(first.iter().any(|(n, _)| n == "dissipation.csv"));
}

#[test]
fn missing_eps_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "noeps.cfg", "switch_eps.cfg", &[("eps", "")]);
    let o = lab(&["run", "--config", cfg.to_str().unwrap(), "--out", &out_arg(tmp.path())]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("eps: required for solver pde"), "{}", stderr(&o));
}

#[test]
fn unknown_key_and_missing_file_are_config_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "typo.cfg", "concave.cfg", &[("grid.ncells", "100")]);
    let o = lab(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("grid.ncells: unknown key"));
    let o = lab(&["run", "--config", "/nonexistent/x.cfg"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn infeasible_constraint_exits_with_regime_code() {
    // kink data loses its peak to the scheme viscosity faster than any
    // multiplier in the window can restore it
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "kink_hj.cfg",
        "fig1.cfg",
        &[("solver", "hj"), ("eps", ""), ("output.profiles", ""), ("time.sample_every", "")],
    );
    let o = lab(&["run", "--config", cfg.to_str().unwrap(), "--out", &out_arg(tmp.path())]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("infeasible"));
}

#[test]
fn multi_env_run_has_one_column_per_component() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "chem.cfg", "chemostat2.cfg", &[("grid.n_cells", "100"), ("time.t_final", "0.1")]);
    let o = lab(&["run", "--config", cfg.to_str().unwrap(), "--out", &out_arg(tmp.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let ts = std::fs::read_to_string(tmp.path().join("chem/timeseries.csv")).unwrap();
    assert!(ts.starts_with("t,I_1,I_2,rho,"));
    let snap = std::fs::read_to_string(tmp.path().join("chem/snapshot_0.1.csv")).unwrap();
    assert!(snap.starts_with("x,n\n"));
}

#[test]
fn oracle_check_single_and_two_bump_pass() {
    let tmp = tempfile::tempdir().unwrap();
    let out = out_arg(tmp.path());
    let single = configs().join("linear_single.cfg");
    let o = lab(&["oracle-check", "--config", single.to_str().unwrap(), "--out", &out]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(tmp.path().join("linear_single/oracle.csv").exists());

    let two = configs().join("linear_two_bump.cfg");
    let o = lab(&["oracle-check", "--config", two.to_str().unwrap(), "--out", &out]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    let value = |key: &str| -> f64 {
        text.lines()
            .find_map(|l| l.strip_prefix(&format!("{key}: ")))
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!(value("oracle.jump_time_error") <= value("oracle.jump_time_error_limit"));
}

#[test]
fn oracle_check_coarse_grid_lists_breaches() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "coarse.cfg", "linear_single.cfg", &[("grid.n_cells", "16")]);
    let o = lab(&["oracle-check", "--config", cfg.to_str().unwrap(), "--out", &out_arg(tmp.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("breach: max_phi_error"));
}

#[test]
fn oracle_check_rejects_other_models() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("concave.cfg");
    let o = lab(&["oracle-check", "--config", cfg.to_str().unwrap(), "--out", &out_arg(tmp.path())]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("model mismatch"));
}

#[test]
fn reproduce_fig1_detects_jump_and_concave_does_not() {
    let tmp = tempfile::tempdir().unwrap();
    let out = out_arg(tmp.path());
    let o = lab(&["reproduce-fig1", "--out", &out]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let dir = tmp.path().join("fig1");
    for f in ["timeseries.csv", "density.csv", "phase.csv", "manifest.txt"] {
        assert!(dir.join(f).exists(), "missing {f}");
    }
    let snaps = std::fs::read_dir(&dir)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().starts_with("snapshot_"))
        .count();
    assert!(snaps >= 5);

    let o = lab(&["reproduce-fig1", "--out", &out, "--model", "concave", "--run-id", "concave"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_eps_writes_children_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "sw.cfg", "switch_eps.cfg", &[("grid.n_cells", "200"), ("time.t_final", "0.3")]);
    let o = lab(&["sweep", "--config", cfg.to_str().unwrap(), "--out", &out_arg(tmp.path()), "eps", "0.04", "0.02", "0.01"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for v in ["0.04", "0.02", "0.01"] {
        assert!(tmp.path().join(format!("sw_eps_{v}/timeseries.csv")).exists());
    }
    let summary = std::fs::read_to_string(tmp.path().join("sw_sweep_eps/summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 4);
    assert!(summary.starts_with("eps,run_id,exit_code,final_I_1,"));
}

#[test]
fn sweep_n_cells_oracle_errors_decrease() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "s61.cfg", "linear_single.cfg", &[]);
    let o = lab(&["sweep", "--config", cfg.to_str().unwrap(), "--out", &out_arg(tmp.path()), "n_cells", "200", "400", "800"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary = std::fs::read_to_string(tmp.path().join("s61_sweep_n_cells/summary.csv")).unwrap();
    let mut lines = summary.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "oracle_phi_error").unwrap();
    let errs: Vec<f64> = lines.map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect();
    assert_eq!(errs.len(), 3);
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
}

#[test]
fn sweep_failures_and_usage() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("concave.cfg");
    let o = lab(&["sweep", "--config", cfg.to_str().unwrap(), "--out", &out_arg(tmp.path()), "n_cells"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("VALUES"));
    let o = lab(&["sweep", "--config", cfg.to_str().unwrap(), "--out", &out_arg(tmp.path()), "n_cells", "100", "x"]);
    assert_eq!(o.status.code(), Some(3));
    let summary = std::fs::read_to_string(tmp.path().join("concave_sweep_n_cells/summary.csv")).unwrap();
    assert!(summary.contains("concave_n_cells_100,0,"));
    let o = lab(&["sweep", "--config", cfg.to_str().unwrap(), "alpha", "1"]);
    assert_eq!(o.status.code(), Some(3));
}

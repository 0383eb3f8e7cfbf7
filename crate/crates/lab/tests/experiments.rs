use dirac_lab::config::ExperimentConfig;
use dirac_lab::experiments::{common_jump, fig1_config, reproduce_fig1, Fig1Model, FIG1_CELLS};
use dirac_lab::runner::{config_hash, run_experiment};

#[test]
fn fig1_jump_time_stable_under_refinement() {
    let tmp = tempfile::tempdir().unwrap();
    let coarse = reproduce_fig1(Fig1Model::PolynomialSwitch, FIG1_CELLS, tmp.path(), "coarse").unwrap();
    let fine = reproduce_fig1(Fig1Model::PolynomialSwitch, 2 * FIG1_CELLS, tmp.path(), "fine").unwrap();
    let (a, _) = coarse.common.expect("coarse jump");
    let (b, _) = fine.common.expect("fine jump");
    let sample = coarse.times[1] - coarse.times[0];
    assert!((a.time() - b.time()).abs() <= 10.0 * sample, "{} vs {}", a.time(), b.time());
}

#[test]
fn fig1_config_round_trips_and_hashes_stably() {
    let tmp = tempfile::tempdir().unwrap();
    let a = fig1_config(Fig1Model::PolynomialSwitch, 100, tmp.path(), "x");
    let b = ExperimentConfig::from_text(&a.to_text(), "y").unwrap();
    assert_eq!(config_hash(&a), config_hash(&b));
    let c = fig1_config(Fig1Model::PolynomialSwitch, 101, tmp.path(), "x");
    assert_ne!(config_hash(&a), config_hash(&c));
}

#[test]
fn common_jump_requires_nearby_events() {
    use dirac_core::series::JumpEvent;
    let ev = |start: usize, end: usize| JumpEvent {
        start,
        end,
        t_before: start as f64,
        t_after: end as f64,
        before: 0.0,
        after: 1.0,
    };
    assert!(common_jump(&[ev(10, 12)], &[ev(16, 17)], 5).is_some());
    assert!(common_jump(&[ev(10, 12)], &[ev(18, 19)], 5).is_none());
    assert!(common_jump(&[ev(30, 31)], &[ev(20, 25)], 5).is_some());
    assert!(common_jump(&[], &[ev(1, 2)], 5).is_none());
}

#[test]
fn ill_prepared_run_reports_decrease_window() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!(
        "output.dir = {}
model.name = concave
grid.x_min = -2
grid.x_max = 2
grid.n_cells = 200
solver = pde
eps = 0.05
time.t_final = 1
init.phase = parabola
init.center = 0.3
init.well_prepared = false
init.mass_scale = 3
",
        tmp.path().display()
    );
    let cfg = ExperimentConfig::from_text(&text, "ill").unwrap();
    let o = run_experiment(&cfg).unwrap();
    let window = o
        .report
        .lines
        .iter()
        .find(|(k, _)| k == "env.decrease_window")
        .map(|(_, v)| v.clone())
        .unwrap();
    assert_ne!(window, "none");
    let end: f64 = window.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!(end < 0.5, "layer ends at {end}");
}

#[test]
fn saved_timeseries_reloads_bit_exactly() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!(
        "output.dir = {}
model.name = linear
grid.x_min = -1
grid.x_max = 4
grid.n_cells = 200
solver = hj
time.t_final = 0.5
init.phase = two_bump
init.alpha = 1
init.delta = 0.5
",
        tmp.path().display()
    );
    let cfg = ExperimentConfig::from_text(&text, "reload").unwrap();
    let o = run_experiment(&cfg).unwrap();
    let s = o.run.series();
    let csv = std::fs::read_to_string(o.dir.join("timeseries.csv")).unwrap();
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), s.len());
    let same = |a: f64, b: f64| a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan());
    for (m, r) in rows.iter().enumerate() {
        let want = [s.times[m], s.env[0][m], s.rho[m], s.xbar_left[m], s.xbar_right[m], s.j[m], s.k[m], s.residual[m], s.lipschitz[m], s.min_second_diff[m]];
        for (c, (&got, &w)) in r.iter().zip(&want).enumerate() {
            assert!(same(got, w), "row {m} col {c}: {got} vs {w}");
        }
        assert_eq!(r[10], s.jump_flags[m] as u8 as f64);
    }
}

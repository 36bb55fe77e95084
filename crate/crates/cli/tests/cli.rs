use std::process::Command as Process;

use ietidp_cli::config::{Pattern, Switch};
use ietidp_cli::{format_kappa, run, write_csv, Experiment, ExperimentConfig, Overrides, ResultRow, Status};

fn row() -> ResultRow {
    ResultRow {
        p: 2,
        h: Some(0),
        round: None,
        patches: 16,
        iterations: Some(3),
        kappa: Some(1.00912),
        dofs: 612,
        wall_time: 0.25,
        status: Status::Ok,
    }
}

fn csv_string(rows: &[ResultRow], timing: bool) -> String {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf, timing).unwrap();
    String::from_utf8(buf).unwrap()
}

fn config(experiment: Experiment) -> ExperimentConfig {
    ExperimentConfig { experiment, ..Default::default() }
}

#[test]
fn kappa_format_switches_to_scientific_at_1000() {
    assert_eq!(format_kappa(6012.3), "6.0e3");
    assert_eq!(format_kappa(29000.0), "2.9e4");
    assert_eq!(format_kappa(1.00912), "1.009");
    assert_eq!(format_kappa(8.35), "8.350");
    assert_eq!(format_kappa(10.774), "10.77");
    assert_eq!(format_kappa(983.94), "983.9");
}

#[test]
fn empty_rows_give_header_only() {
    let s = csv_string(&[], false);
    assert_eq!(s, "p,h,round,patches,iterations,kappa,dofs,status\n");
    assert_eq!(csv_string(&[], true).lines().next().unwrap(), "p,h,round,patches,iterations,kappa,dofs,wall_time,status");
}

#[test]
fn one_row_gives_two_lines() {
    let s = csv_string(&[row()], true);
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[1], "2,2^-1,,16,3,1.009,612,0.250,ok");
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, r#"{"p": [3, 4], "tol": 1e-8, "pattern": "bad-checkerboard", "consistency": "off"}"#).unwrap();
    let o = Overrides { config: Some(path), p: Some(vec![2]), ..Default::default() };
    let cfg = ExperimentConfig::resolve(Experiment::Checkerboard, &o).unwrap();
    assert_eq!(cfg.p, vec![2]);
    assert_eq!(cfg.tolerance(), 1e-8);
    assert_eq!(cfg.pattern, Pattern::Bad);
    assert_eq!(cfg.consistency, Switch::Off);
    assert_eq!(cfg.refine, vec![0]);
}

#[test]
fn invalid_configs_are_rejected() {
    assert!(ExperimentConfig::from_json(r#"{"degree": 2}"#).is_err());
    let o = Overrides { tol: Some(1.5), ..Default::default() };
    assert!(ExperimentConfig::resolve(Experiment::Checkerboard, &o).is_err());
    let o = Overrides { p: Some(vec![1]), ..Default::default() };
    assert!(ExperimentConfig::resolve(Experiment::Checkerboard, &o).is_err());
    assert!(ExperimentConfig::resolve(Experiment::Single, &o).is_ok());
}

#[test]
fn default_tolerance_depends_on_experiment() {
    assert_eq!(config(Experiment::Checkerboard).tolerance(), 1e-6);
    assert_eq!(config(Experiment::Adaptive).tolerance(), 1e-10);
}

#[test]
fn identical_config_gives_identical_csv() {
    let cfg = ExperimentConfig { p: vec![2, 3], refine: vec![0], ..config(Experiment::Checkerboard) };
    let a = csv_string(&run(&cfg, |_| {}).unwrap(), false);
    let b = csv_string(&run(&cfg, |_| {}).unwrap(), false);
    assert_eq!(a, b);
}

#[test]
fn over_budget_cells_are_skipped() {
    let cfg = ExperimentConfig { refine: vec![0, 1], max_dofs: 1000, ..config(Experiment::Checkerboard) };
    let rows = run(&cfg, |_| {}).unwrap();
    assert_eq!(rows[0].status, Status::Ok);
    assert_eq!(rows[1].status, Status::SkippedOverBudget);
    assert_eq!(rows[1].iterations, None);
    let csv = csv_string(&rows, false);
    let fields: Vec<&str> = csv.lines().nth(2).unwrap().split(',').collect();
    assert_eq!(fields[4..6], ["", ""]);
    assert!(fields[6].parse::<usize>().unwrap() > 1000);
    assert_eq!(fields[7], "SkippedOverBudget");
}

#[test]
fn checkerboard_cells_follow_the_tables() {
    let good = run(&config(Experiment::Single), |_| {}).unwrap();
    assert_eq!(good[0].iterations, Some(3));
    assert!((good[0].kappa.unwrap() - 1.009).abs() < 0.01);

    let bad = run(&ExperimentConfig { pattern: Pattern::Bad, ..config(Experiment::Single) }, |_| {}).unwrap();
    assert!(bad[0].kappa.unwrap() > 1e3);

    let uniform = run(&ExperimentConfig { pattern: Pattern::Uniform, ..config(Experiment::Single) }, |_| {}).unwrap();
    assert!((uniform[0].kappa.unwrap() - 8.35).abs() < 0.05 * 8.35);
    assert!(uniform[0].iterations.unwrap().abs_diff(14) <= 2);
}

#[test]
fn adaptive_first_round_has_four_patches() {
    let cfg = ExperimentConfig { rounds: 2, ..config(Experiment::Adaptive) };
    let rows = run(&cfg, |_| {}).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].patches, 4);
    assert!(rows[0].iterations.unwrap() <= 10);
    assert!(rows[0].kappa.unwrap() < 4.0);
    assert!(rows[1].patches > 4);
}

#[test]
fn binary_writes_csv_and_history() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rows.csv");
    let hist = dir.path().join("hist.csv");
    let status = Process::new(env!("CARGO_BIN_EXE_ietidp"))
        .args(["single", "--pattern", "uniform", "--out"])
        .arg(&out)
        .arg("--history")
        .arg(&hist)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let table = String::from_utf8(status.stdout).unwrap();
    assert!(table.starts_with("p"));
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 2);
    let h = std::fs::read_to_string(&hist).unwrap();
    assert_eq!(h.lines().next().unwrap(), "iteration,residual,kappa");
    assert!(h.lines().count() > 10);

    let bad = Process::new(env!("CARGO_BIN_EXE_ietidp")).args(["checkerboard", "--tol", "3"]).output().unwrap();
    assert!(!bad.status.success());
}

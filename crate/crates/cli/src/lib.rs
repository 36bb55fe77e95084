//! Experiment driver for the IETI-DP solver: resolves an [`ExperimentConfig`],
//! runs the checkerboard sweep, the adaptive experiment or a single solve, and
//! writes [`ResultRow`]s as CSV and as a console table.

// `!(x > 0.0)` checks deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};
use ietidp_core::geometry::Point;
use ietidp_core::krylov::SolveReport;
use ietidp_core::scenarios::{self, AdaptiveOptions, Annulus, SolverOptions};

pub mod config;
pub mod report;

pub use config::{Experiment, ExperimentConfig, Overrides};
pub use report::{emit_csv, emit_history, format_kappa, render_table, write_csv, ResultRow, Status};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("config is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("p={p}, {cell}: {source}")]
    Cell { p: usize, cell: String, source: ietidp_core::Error },
}

#[derive(Debug, Parser)]
#[command(name = "ietidp", version, about = "IETI-DP experiments on multi-patch quarter annulus domains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// 4x4 checkerboard sweep over degrees and refinement levels.
    Checkerboard(Overrides),
    /// Adaptive patch refinement on the 2x2 corner annulus.
    Adaptive(Overrides),
    /// One checkerboard cell (first p, first refine), optionally with PCG history.
    Single(Overrides),
}

impl Command {
    pub fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        match self {
            Command::Checkerboard(o) => ExperimentConfig::resolve(Experiment::Checkerboard, o),
            Command::Adaptive(o) => ExperimentConfig::resolve(Experiment::Adaptive, o),
            Command::Single(o) => ExperimentConfig::resolve(Experiment::Single, o),
        }
    }
}

fn rhs(cfg: &ExperimentConfig) -> impl Fn(Point) -> f64 {
    match cfg.rhs {
        config::Rhs::ConstantOne => |_: Point| 1.0,
    }
}

fn annulus(cfg: &ExperimentConfig) -> Annulus {
    Annulus { r_inner: cfg.r_inner, r_outer: cfg.r_outer }
}

fn solver(cfg: &ExperimentConfig) -> SolverOptions {
    SolverOptions { precond: cfg.precond.into(), tol: cfg.tolerance(), max_iter: cfg.max_iter }
}

/// One checkerboard cell. Returns the PCG report unless the cell was skipped.
fn checkerboard_cell(cfg: &ExperimentConfig, p: usize, r: u32) -> Result<(ResultRow, Option<SolveReport>), CliError> {
    let wrap = |source| CliError::Cell { p, cell: format!("h={}", report::format_h(r)), source };
    let patches = scenarios::checkerboard(p, r, cfg.disparity, cfg.pattern.into(), cfg.nu, annulus(cfg))
        .map_err(wrap)?;
    let mut row = ResultRow {
        p,
        h: Some(r),
        round: None,
        patches: patches.len(),
        iterations: None,
        kappa: None,
        dofs: patches.iter().map(|q| q.knots[0].num_basis() * q.knots[1].num_basis()).sum(),
        wall_time: 0.0,
        status: Status::SkippedOverBudget,
    };
    if row.dofs > cfg.max_dofs {
        return Ok((row, None));
    }
    let start = Instant::now();
    let solved = scenarios::solve_patches(patches, &rhs(cfg), &solver(cfg)).map_err(wrap)?;
    row.wall_time = start.elapsed().as_secs_f64();
    row.iterations = Some(solved.report.iterations);
    row.kappa = Some(solved.report.condition);
    row.dofs = solved.operator.num_dofs();
    row.status = Status::Ok;
    Ok((row, Some(solved.report)))
}

pub fn run_checkerboard(cfg: &ExperimentConfig, mut on_row: impl FnMut(&ResultRow)) -> Result<Vec<ResultRow>, CliError> {
    let mut rows = Vec::new();
    for &p in &cfg.p {
        for &r in &cfg.refine {
            let (row, _) = checkerboard_cell(cfg, p, r)?;
            on_row(&row);
            rows.push(row);
        }
    }
    Ok(rows)
}

pub fn run_single(cfg: &ExperimentConfig) -> Result<(ResultRow, Option<SolveReport>), CliError> {
    checkerboard_cell(cfg, cfg.p[0], cfg.refine[0])
}

/// One row per round and degree. The DOF ceiling does not apply: adaptive
/// configurations stay far below it.
pub fn run_adaptive(cfg: &ExperimentConfig, mut on_row: impl FnMut(&ResultRow)) -> Result<Vec<ResultRow>, CliError> {
    let mut rows = Vec::new();
    for &p in &cfg.p {
        let opts = AdaptiveOptions {
            p,
            rounds: cfg.rounds,
            theta: cfg.theta,
            consistency: cfg.consistency == config::Switch::On,
            nu_corner: cfg.nu,
            annulus: annulus(cfg),
            solver: solver(cfg),
        };
        let mut start = Instant::now();
        scenarios::run_adaptive(&opts, |round, _| {
            let row = ResultRow {
                p,
                h: None,
                round: Some(round.round),
                patches: round.num_patches,
                iterations: Some(round.iterations),
                kappa: Some(round.condition),
                dofs: round.num_dofs,
                wall_time: start.elapsed().as_secs_f64(),
                status: Status::Ok,
            };
            on_row(&row);
            rows.push(row);
            start = Instant::now();
        })
        .map_err(|source| CliError::Cell { p, cell: format!("round {}", rows.len() + 1), source })?;
    }
    Ok(rows)
}

/// Runs the configured experiment; `on_row` sees every row as it completes.
pub fn run(cfg: &ExperimentConfig, on_row: impl FnMut(&ResultRow)) -> Result<Vec<ResultRow>, CliError> {
    match cfg.experiment {
        Experiment::Checkerboard => run_checkerboard(cfg, on_row),
        Experiment::Adaptive => run_adaptive(cfg, on_row),
        Experiment::Single => {
            let mut on_row = on_row;
            let (row, report) = run_single(cfg)?;
            if let (Some(path), Some(report)) = (&cfg.history, &report) {
                emit_history(report, path)?;
            }
            on_row(&row);
            Ok(vec![row])
        }
    }
}

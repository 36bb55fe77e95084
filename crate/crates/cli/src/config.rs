//! Experiment configuration: defaults, JSON file, command-line overrides.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use ietidp_core::precond::PreconditionerKind;
use ietidp_core::scenarios::CoefficientPattern;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Checkerboard,
    Adaptive,
    Single,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Pattern {
    Uniform,
    #[value(alias = "good-checkerboard")]
    #[serde(alias = "good-checkerboard")]
    Good,
    #[value(alias = "bad-checkerboard")]
    #[serde(alias = "bad-checkerboard")]
    Bad,
}

impl From<Pattern> for CoefficientPattern {
    fn from(p: Pattern) -> Self {
        match p {
            Pattern::Uniform => CoefficientPattern::Uniform,
            Pattern::Good => CoefficientPattern::Good,
            Pattern::Bad => CoefficientPattern::Bad,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Precond {
    Selection,
    Deluxe,
    None,
}

impl From<Precond> for PreconditionerKind {
    fn from(p: Precond) -> Self {
        match p {
            Precond::Selection => PreconditionerKind::Selection,
            Precond::Deluxe => PreconditionerKind::Deluxe,
            Precond::None => PreconditionerKind::None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Switch {
    On,
    Off,
}

/// Right-hand side of the Poisson problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Rhs {
    ConstantOne,
}

/// Fully resolved experiment configuration. JSON keys equal the long flag names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Spline degrees to sweep.
    pub p: Vec<usize>,
    /// Uniform refinement levels; level `r` is `h_hat = 2^-(r+1)`.
    pub refine: Vec<u32>,
    pub disparity: u32,
    pub pattern: Pattern,
    /// Large coefficient: orange checkerboard patches, corner patch of the adaptive run.
    pub nu: f64,
    pub precond: Precond,
    /// PCG tolerance; the experiment's own default when absent.
    pub tol: Option<f64>,
    pub max_iter: usize,
    pub theta: f64,
    pub consistency: Switch,
    pub rounds: usize,
    pub r_inner: f64,
    pub r_outer: f64,
    /// Cells whose tensor DOF count exceeds this are skipped, not solved.
    pub max_dofs: usize,
    pub rhs: Rhs,
    /// Include the wall time column in the CSV (it breaks byte-for-byte reproducibility).
    pub timing: bool,
    pub out: Option<PathBuf>,
    /// Per-iteration residual and condition history of a `single` run.
    pub history: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::Checkerboard,
            p: vec![2],
            refine: vec![0],
            disparity: 1,
            pattern: Pattern::Good,
            nu: 1000.0,
            precond: Precond::Selection,
            tol: None,
            max_iter: 5000,
            theta: 0.8,
            consistency: Switch::On,
            rounds: 8,
            r_inner: 1.0,
            r_outer: 2.0,
            max_dofs: 2_000_000,
            rhs: Rhs::ConstantOne,
            timing: false,
            out: None,
            history: None,
        }
    }
}

/// Long flags overriding the config file. Every field of
/// [`ExperimentConfig`] except `experiment` (the subcommand) has one.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// JSON config file; flags given on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub p: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub refine: Option<Vec<u32>>,
    #[arg(long)]
    pub disparity: Option<u32>,
    #[arg(long, value_enum)]
    pub pattern: Option<Pattern>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long, value_enum)]
    pub precond: Option<Precond>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long, value_enum)]
    pub consistency: Option<Switch>,
    #[arg(long)]
    pub rounds: Option<usize>,
    #[arg(long)]
    pub r_inner: Option<f64>,
    #[arg(long)]
    pub r_outer: Option<f64>,
    #[arg(long)]
    pub max_dofs: Option<usize>,
    #[arg(long, value_enum)]
    pub rhs: Option<Rhs>,
    #[arg(long)]
    pub timing: Option<bool>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub history: Option<PathBuf>,
}

macro_rules! apply {
    ($cfg:ident, $o:ident, $($f:ident),*) => {
        $(if let Some(v) = $o.$f.clone() { $cfg.$f = v; })*
    };
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
        Self::from_json(&text)
    }

    /// Config file (or defaults), then the subcommand, then the flags.
    pub fn resolve(experiment: Experiment, o: &Overrides) -> Result<Self, CliError> {
        let mut cfg = match &o.config {
            Some(path) => Self::load(path)?,
            None => Self::default(),
        };
        cfg.experiment = experiment;
        cfg.apply(o);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        let cfg = self;
        apply!(
            cfg, o, p, refine, disparity, pattern, nu, precond, max_iter, theta, consistency, rounds, r_inner,
            r_outer, max_dofs, rhs, timing
        );
        if o.tol.is_some() {
            cfg.tol = o.tol;
        }
        if o.out.is_some() {
            cfg.out = o.out.clone();
        }
        if o.history.is_some() {
            cfg.history = o.history.clone();
        }
    }

    pub fn tolerance(&self) -> f64 {
        self.tol.unwrap_or(match self.experiment {
            Experiment::Adaptive => 1e-10,
            _ => 1e-6,
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.p.is_empty() {
            return bad("p: at least one degree is required".into());
        }
        if self.p.contains(&0) {
            return bad("p: degrees must be positive".into());
        }
        if self.experiment == Experiment::Checkerboard && self.p.iter().any(|&p| p < 2) {
            return bad("p: checkerboard sweeps need p >= 2".into());
        }
        if self.experiment != Experiment::Adaptive && self.refine.is_empty() {
            return bad("refine: at least one level is required".into());
        }
        let tol = self.tolerance();
        if !(tol > 0.0 && tol < 1.0) {
            return bad(format!("tol: {tol} is not in (0, 1)"));
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return bad(format!("theta: {} is not in (0, 1]", self.theta));
        }
        if !(self.nu > 0.0) {
            return bad(format!("nu: {} is not positive", self.nu));
        }
        if !(self.r_inner > 0.0 && self.r_outer > self.r_inner) {
            return bad(format!("annulus radii ({}, {}) are not 0 < r-inner < r-outer", self.r_inner, self.r_outer));
        }
        if self.experiment == Experiment::Adaptive && self.rounds == 0 {
            return bad("rounds: must be positive".into());
        }
        Ok(())
    }
}

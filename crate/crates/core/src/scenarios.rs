//! Patch configurations of the numerical experiments and the end-to-end solve.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::adaptivity::{consistency_split, doerfler_mark, estimate, split_patches};

use crate::coupling::{order_interfaces, InterfaceCoupling};
use crate::geometry::{build_topology, GeometryMap, MultiPatchTopology, Patch, Point, DEFAULT_TOPOLOGY_TOL};
use crate::ieti::IetiOperator;
use crate::krylov::{pcg, SolveReport};
use crate::precond::{Preconditioner, PreconditionerKind};
use crate::splines::KnotVector;
use crate::Error;

const HALF_PI: f64 = core::f64::consts::FRAC_PI_2;

/// Coefficient and refinement pattern of the checkerboard.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CoefficientPattern {
    /// `nu = 1` everywhere; the white patches carry the extra refinement.
    Uniform,
    /// White patches (`nu = 1`) are refined, orange ones carry the large `nu`.
    Good,
    /// Orange patches (large `nu`) are refined.
    Bad,
}

/// Quarter annulus `r in [r_inner, r_outer]`, `theta in [0, pi/2]`, radial
/// direction first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Annulus {
    pub r_inner: f64,
    pub r_outer: f64,
}

impl Default for Annulus {
    fn default() -> Self {
        Self { r_inner: 1.0, r_outer: 2.0 }
    }
}

impl Annulus {
    /// Sub-sector `[i/n, (i+1)/n] x [j/n, (j+1)/n]` of the parameter square.
    pub fn sector(&self, i: usize, j: usize, n: usize) -> GeometryMap {
        let dr = (self.r_outer - self.r_inner) / n as f64;
        let dt = HALF_PI / n as f64;
        GeometryMap::AnnulusSector {
            center: [0.0, 0.0],
            r_inner: self.r_inner + dr * i as f64,
            r_outer: self.r_inner + dr * (i + 1) as f64,
            theta0: dt * j as f64,
            theta1: dt * (j + 1) as f64,
        }
    }
}

/// Uniform open knot vector with `(p + 1) 2^levels` elements.
pub fn initial_knots(p: usize, levels: u32) -> KnotVector {
    KnotVector::uniform(p, (p + 1) << levels)
}

/// The 4x4 checkerboard: patch `(i, j)` is orange when `i + j` is even.
/// All patches get `refine` uniform refinements of `h_hat = 1/(p+1)`, the
/// refined colour class `disparity` more.
pub fn checkerboard(
    p: usize,
    refine: u32,
    disparity: u32,
    pattern: CoefficientPattern,
    nu_orange: f64,
    annulus: Annulus,
) -> Result<Vec<Patch>, Error> {
    let mut patches = Vec::with_capacity(16);
    for j in 0..4 {
        for i in 0..4 {
            let orange = (i + j) % 2 == 0;
            let nu = match pattern {
                CoefficientPattern::Uniform => 1.0,
                _ if orange => nu_orange,
                _ => 1.0,
            };
            let refined = match pattern {
                CoefficientPattern::Uniform | CoefficientPattern::Good => !orange,
                CoefficientPattern::Bad => orange,
            };
            let kv = initial_knots(p, refine + if refined { disparity } else { 0 });
            patches.push(Patch::new(annulus.sector(i, j, 4), [kv.clone(), kv], nu)?);
        }
    }
    Ok(patches)
}

/// The 2x2 quarter annulus of the adaptive experiment; the patch at the
/// inner radius and small angles carries `nu_corner`.
pub fn corner_annulus(p: usize, nu_corner: f64, annulus: Annulus) -> Result<Vec<Patch>, Error> {
    let mut patches = Vec::with_capacity(4);
    for j in 0..2 {
        for i in 0..2 {
            let nu = if i == 0 && j == 0 { nu_corner } else { 1.0 };
            let kv = initial_knots(p, 0);
            patches.push(Patch::new(annulus.sector(i, j, 2), [kv.clone(), kv], nu)?);
        }
    }
    Ok(patches)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub precond: PreconditionerKind,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { precond: PreconditionerKind::Selection, tol: 1e-6, max_iter: 5000 }
    }
}

/// Everything produced by one solve.
#[derive(Debug, Clone)]
pub struct Solved {
    pub topology: MultiPatchTopology,
    pub couplings: Vec<InterfaceCoupling>,
    pub operator: IetiOperator,
    pub multipliers: Vec<f64>,
    /// Patch coefficient vectors in layout numbering.
    pub solution: Vec<Vec<f64>>,
    pub report: SolveReport,
}

impl Solved {
    /// `||F lambda - d|| / ||d||`.
    pub fn true_residual(&self) -> f64 {
        let d = self.operator.rhs();
        let mut r = self.operator.apply_f(&self.multipliers).expect("multiplier length");
        for (a, b) in r.iter_mut().zip(&d) {
            *a -= b;
        }
        let nd = crate::linalg::norm2(&d);
        if nd == 0.0 {
            crate::linalg::norm2(&r)
        } else {
            crate::linalg::norm2(&r) / nd
        }
    }
}

/// Builds the topology and the operator and runs PCG on the dual problem.
pub fn solve_topology(
    topology: MultiPatchTopology,
    f: &dyn Fn(Point) -> f64,
    opts: &SolverOptions,
) -> Result<Solved, Error> {
    let couplings = order_interfaces(&topology)?;
    let operator = IetiOperator::new(&topology, &couplings, f)?;
    let precond = Preconditioner::build(opts.precond, &operator, &couplings)?;
    let d = operator.rhs();
    let (multipliers, report) =
        pcg(|x| operator.apply_f(x).expect("multiplier length"), |r| precond.apply(&operator, r), &d, opts.tol, opts.max_iter)?;
    let solution = operator.reconstruct(&multipliers)?;
    Ok(Solved { topology, couplings, operator, multipliers, solution, report })
}

pub fn solve_patches(patches: Vec<Patch>, f: &dyn Fn(Point) -> f64, opts: &SolverOptions) -> Result<Solved, Error> {
    let topology = build_topology(patches, DEFAULT_TOPOLOGY_TOL)?;
    solve_topology(topology, f, opts)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveOptions {
    pub p: usize,
    pub rounds: usize,
    pub theta: f64,
    /// Split coarse sides whose coefficient is smaller than the refined side's.
    pub consistency: bool,
    pub nu_corner: f64,
    pub annulus: Annulus,
    pub solver: SolverOptions,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self {
            p: 2,
            rounds: 8,
            theta: 0.8,
            consistency: true,
            nu_corner: 1000.0,
            annulus: Annulus::default(),
            solver: SolverOptions { tol: 1e-10, ..SolverOptions::default() },
        }
    }
}

/// One solve-estimate-mark-split step.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveRound {
    pub round: usize,
    pub num_patches: usize,
    pub num_dofs: usize,
    pub iterations: usize,
    pub condition: f64,
    pub eta: f64,
    /// Patches added by consistency splitting before this round's solve.
    pub consistency_patches: usize,
    pub true_residual: f64,
}

/// Adaptive patch refinement on the corner annulus with `f = 1`. `on_round`
/// sees every round's result and solve before refinement continues.
pub fn run_adaptive(
    opts: &AdaptiveOptions,
    mut on_round: impl FnMut(&AdaptiveRound, &Solved),
) -> Result<Vec<AdaptiveRound>, Error> {
    let f = |_: Point| 1.0;
    let mut config = consistency_split(corner_annulus(opts.p, opts.nu_corner, opts.annulus)?, opts.consistency)?;
    let mut rows = Vec::with_capacity(opts.rounds);
    for round in 1..=opts.rounds {
        let extra = config.extra_patches;
        let solved = solve_topology(config.topology, &f, &opts.solver)?;
        let est = estimate(&solved.topology, &solved.couplings, solved.operator.layouts(), &solved.solution, &f)?;
        let row = AdaptiveRound {
            round,
            num_patches: solved.topology.num_patches(),
            num_dofs: solved.operator.num_dofs(),
            iterations: solved.report.iterations,
            condition: solved.report.condition,
            eta: est.eta(),
            consistency_patches: extra,
            true_residual: solved.true_residual(),
        };
        on_round(&row, &solved);
        rows.push(row);
        if round == opts.rounds {
            break;
        }
        let marked: BTreeSet<usize> = doerfler_mark(&est.per_patch, opts.theta)?.into_iter().collect();
        let patches = split_patches(&solved.topology.patches, &marked)?;
        config = consistency_split(patches, opts.consistency)?;
    }
    Ok(rows)
}

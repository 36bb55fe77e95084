//! Residual error estimation, Dörfler marking, patch splitting and
//! consistency splitting.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::assembly::DofLayout;
use crate::coupling::{check_consistency, check_schoenberg_whitney, order_interfaces, CouplingError, InterfaceCoupling};
use crate::geometry::{build_topology, det, GeometryError, MultiPatchTopology, Patch, Point, DEFAULT_TOPOLOGY_TOL};
use crate::math::{hypot, sqrt};
use crate::quadrature::gauss_legendre;
use crate::splines::SplineError;

/// Consistency splitting gives up after this many rounds.
pub const MAX_CONSISTENCY_ROUNDS: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdaptivityError {
    #[error("estimator vanishes; nothing to mark")]
    EmptyEstimator,
    #[error("consistency splitting did not terminate within {0} rounds")]
    NonTermination(usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Coupling(#[from] CouplingError),
    #[error(transparent)]
    Spline(#[from] SplineError),
}

pub type Result<T> = core::result::Result<T, AdaptivityError>;

/// Value, physical gradient and physical Laplacian of a spline function on a patch.
pub fn eval_physical(patch: &Patch, tensor: &[f64], xi: Point) -> Result<(f64, [f64; 2], f64)> {
    let (f1, d1) = patch.knots[0].eval_derivs(xi[0], 2)?;
    let (f2, d2) = patch.knots[1].eval_derivs(xi[1], 2)?;
    let n1 = patch.knots[0].num_basis();
    let (mut u, mut g1, mut g2, mut h11, mut h12, mut h22) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for b in 0..d2[0].len() {
        for a in 0..d1[0].len() {
            let c = tensor[(f1 + a) + n1 * (f2 + b)];
            if c == 0.0 {
                continue;
            }
            u += c * d1[0][a] * d2[0][b];
            g1 += c * d1[1][a] * d2[0][b];
            g2 += c * d1[0][a] * d2[1][b];
            h11 += c * d1[2][a] * d2[0][b];
            h12 += c * d1[1][a] * d2[1][b];
            h22 += c * d1[0][a] * d2[2][b];
        }
    }
    let (j, h) = patch.geometry.derivatives(xi)?;
    let dj = det(&j);
    // grad_x = J^{-T} grad_xi
    let gx = [(j[1][1] * g1 - j[1][0] * g2) / dj, (-j[0][1] * g1 + j[0][0] * g2) / dj];
    // J^T H_x J = H_xi - sum_r (grad_x)_r H^r
    let m11 = h11 - gx[0] * h[0][0] - gx[1] * h[0][1];
    let m12 = h12 - gx[0] * h[1][0] - gx[1] * h[1][1];
    let m22 = h22 - gx[0] * h[2][0] - gx[1] * h[2][1];
    // trace(H_x) = (J^T J)^{-1} : M
    let g = [
        j[0][0] * j[0][0] + j[1][0] * j[1][0],
        j[0][0] * j[0][1] + j[1][0] * j[1][1],
        j[0][1] * j[0][1] + j[1][1] * j[1][1],
    ];
    let gd = g[0] * g[2] - g[1] * g[1];
    let lap = (g[2] * m11 - 2.0 * g[1] * m12 + g[0] * m22) / gd;
    Ok((u, gx, lap))
}

/// Per-patch squared indicators and interface jump integrals.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorReport {
    /// `eta_k^2`.
    pub per_patch: Vec<f64>,
    pub total: f64,
    /// `|| [nu grad u] . n ||^2` over each coupling's interface.
    pub jumps: Vec<f64>,
}

impl EstimatorReport {
    pub fn eta(&self) -> f64 {
        sqrt(self.total)
    }
}

/// `eta_k^2 = h_k^2 ||f + nu lap u||^2 + sum_l h_k / 2 ||[nu grad u] . n||^2`.
/// Every interface contributes to both adjacent patches, each with its own `h`.
pub fn estimate(
    topo: &MultiPatchTopology,
    couplings: &[InterfaceCoupling],
    layouts: &[DofLayout],
    solution: &[Vec<f64>],
    f: &dyn Fn(Point) -> f64,
) -> Result<EstimatorReport> {
    let n = topo.num_patches();
    let tensors: Vec<Vec<f64>> = (0..n).map(|k| layouts[k].to_tensor(&solution[k])).collect();
    let h: Vec<f64> = topo.patches.iter().map(|p| p.h()).collect();
    let mut per_patch = vec![0.0; n];
    for (k, patch) in topo.patches.iter().enumerate() {
        let nq = patch.degree() + 2;
        let (x, w) = gauss_legendre(nq);
        let bp1 = patch.knots[0].breakpoints();
        let bp2 = patch.knots[1].breakpoints();
        let mut vol = 0.0;
        for e2 in bp2.windows(2) {
            for e1 in bp1.windows(2) {
                for q2 in 0..nq {
                    for q1 in 0..nq {
                        let xi = [e1[0] + (e1[1] - e1[0]) * x[q1], e2[0] + (e2[1] - e2[0]) * x[q2]];
                        let (_, _, lap) = eval_physical(patch, &tensors[k], xi)?;
                        let j = patch.geometry.jacobian(xi)?;
                        let wt = w[q1] * w[q2] * (e1[1] - e1[0]) * (e2[1] - e2[0]) * det(&j).abs();
                        let r = f(patch.geometry.eval(xi)?) + patch.nu * lap;
                        vol += r * r * wt;
                    }
                }
            }
        }
        per_patch[k] = h[k] * h[k] * vol;
    }
    let mut jumps = Vec::with_capacity(couplings.len());
    for c in couplings {
        let (kf, kc) = (c.fine.patch, c.coarse.patch);
        let (pf, pc) = (&topo.patches[kf], &topo.patches[kc]);
        let nq = pf.degree().max(pc.degree()) + 2;
        let (x, w) = gauss_legendre(nq);
        let dir = c.fine.side.direction();
        let mut integral = 0.0;
        for e in pf.knots[dir].breakpoints().windows(2) {
            for q in 0..nq {
                let t = e[0] + (e[1] - e[0]) * x[q];
                let xf = c.fine.side.point(t);
                let xc = c.coarse.side.point(c.coarse_param(t));
                let (_, gf, _) = eval_physical(pf, &tensors[kf], xf)?;
                let (_, gc, _) = eval_physical(pc, &tensors[kc], xc)?;
                let jf = pf.geometry.jacobian(xf)?;
                let tan = [jf[0][dir], jf[1][dir]];
                let len = hypot(tan[0], tan[1]);
                let nrm = [tan[1] / len, -tan[0] / len];
                let jump = (pf.nu * gf[0] - pc.nu * gc[0]) * nrm[0] + (pf.nu * gf[1] - pc.nu * gc[1]) * nrm[1];
                integral += jump * jump * len * w[q] * (e[1] - e[0]);
            }
        }
        per_patch[kf] += 0.5 * h[kf] * integral;
        per_patch[kc] += 0.5 * h[kc] * integral;
        jumps.push(integral);
    }
    let total = per_patch.iter().sum();
    Ok(EstimatorReport { per_patch, total, jumps })
}

/// Smallest greedy set (largest indicators first) with
/// `sum_M eta_k^2 > theta * sum eta_k^2`, returned in ascending order.
pub fn doerfler_mark(eta_sq: &[f64], theta: f64) -> Result<Vec<usize>> {
    let total: f64 = eta_sq.iter().sum();
    if !(total > 0.0) {
        return Err(AdaptivityError::EmptyEstimator);
    }
    let mut order: Vec<usize> = (0..eta_sq.len()).collect();
    order.sort_by(|&a, &b| eta_sq[b].total_cmp(&eta_sq[a]).then(a.cmp(&b)));
    let mut acc = 0.0;
    let mut marked = Vec::new();
    for k in order {
        marked.push(k);
        acc += eta_sq[k];
        if acc > theta * total {
            break;
        }
    }
    marked.sort_unstable();
    Ok(marked)
}

/// Bisects the parameter domain into 2x2 children ordered lexicographically.
/// Child knots are the dyadically refined parent knots restricted to the
/// child's range, so every child keeps the parent's relative grid size.
pub fn split_patch(patch: &Patch) -> Result<[Patch; 4]> {
    let fine = [patch.knots[0].dyadic_refine(), patch.knots[1].dyadic_refine()];
    let halves = [[0.0, 0.5], [0.5, 1.0]];
    let mut out = Vec::with_capacity(4);
    for (idx, (b, a)) in [(0, 0), (0, 1), (1, 0), (1, 1)].into_iter().enumerate() {
        let (ra, rb) = (halves[a], halves[b]);
        let geometry = patch.geometry.restrict(ra, rb)?;
        let knots = [fine[0].restrict(ra[0], ra[1])?, fine[1].restrict(rb[0], rb[1])?];
        let mut child = Patch::new(geometry, knots, patch.nu)?;
        child.level = patch.level + 1;
        child.lineage = patch.lineage.clone();
        child.lineage.push(idx as u8);
        out.push(child);
    }
    Ok(out.try_into().expect("four children"))
}

/// Replaces the patches at `indices` by their children.
pub fn split_patches(patches: &[Patch], indices: &BTreeSet<usize>) -> Result<Vec<Patch>> {
    let mut out = Vec::with_capacity(patches.len() + 3 * indices.len());
    for (k, p) in patches.iter().enumerate() {
        if indices.contains(&k) {
            out.extend(split_patch(p)?);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

/// Patch configuration after consistency splitting.
#[derive(Debug, Clone)]
pub struct ConsistentConfiguration {
    pub topology: MultiPatchTopology,
    pub couplings: Vec<InterfaceCoupling>,
    /// Patches added by consistency splits.
    pub extra_patches: usize,
}

/// Splits patches until every local saddle system is admissible and, if
/// `enforce_coefficients`, no refined interface side carries the larger
/// coefficient. The coarse side of a violating interface is split; an edge
/// failing the Schoenberg–Whitney check has its own patch split.
pub fn consistency_split(patches: Vec<Patch>, enforce_coefficients: bool) -> Result<ConsistentConfiguration> {
    let mut patches = patches;
    let mut extra = 0;
    for _ in 0..MAX_CONSISTENCY_ROUNDS {
        let topology = build_topology(patches, DEFAULT_TOPOLOGY_TOL)?;
        let couplings = order_interfaces(&topology)?;
        let mut split = BTreeSet::new();
        if enforce_coefficients {
            for i in check_consistency(&topology, &couplings) {
                split.insert(couplings[i].coarse.patch);
            }
        }
        let layouts: Vec<DofLayout> =
            (0..topology.num_patches()).map(|k| DofLayout::for_patch(&topology.patches[k], topology.dirichlet[k])).collect();
        for r in check_schoenberg_whitney(&topology, &layouts) {
            if !r.passed {
                split.insert(r.edge.patch);
            }
        }
        if split.is_empty() {
            return Ok(ConsistentConfiguration { topology, couplings, extra_patches: extra });
        }
        extra += 3 * split.len();
        patches = split_patches(&topology.patches, &split)?;
    }
    Err(AdaptivityError::NonTermination(MAX_CONSISTENCY_ROUNDS))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GeometryMap;
    use crate::splines::KnotVector;

    #[test]
    fn doerfler_examples() {
        assert_eq!(doerfler_mark(&[16.0, 9.0, 4.0, 1.0], 0.8).unwrap(), vec![0, 1]);
        assert_eq!(doerfler_mark(&[1.0, 5.0, 2.0], 1e-12).unwrap(), vec![1]);
        assert_eq!(doerfler_mark(&[1.0; 10], 0.8).unwrap().len(), 9);
        assert_eq!(doerfler_mark(&[0.0, 0.0], 0.8), Err(AdaptivityError::EmptyEstimator));
    }

    #[test]
    fn split_unit_square() {
        let kv = KnotVector::uniform(2, 3);
        let p = Patch::new(GeometryMap::identity(), [kv.clone(), kv.clone()], 1.0).unwrap();
        let ch = split_patch(&p).unwrap();
        let lo = [[0.0, 0.0], [0.5, 0.0], [0.0, 0.5], [0.5, 0.5]];
        for (c, l) in ch.iter().zip(lo) {
            let a = c.geometry.eval([0.0, 0.0]).unwrap();
            let b = c.geometry.eval([1.0, 1.0]).unwrap();
            assert!((a[0] - l[0]).abs() < 1e-15 && (a[1] - l[1]).abs() < 1e-15);
            assert!((b[0] - l[0] - 0.5).abs() < 1e-15 && (b[1] - l[1] - 0.5).abs() < 1e-15);
            for (x, y) in c.knots[0].knots().iter().zip(kv.knots()) {
                assert!((x - y).abs() < 1e-14);
            }
            assert!((c.diameter() - 0.5 * p.diameter()).abs() < 1e-12);
            assert_eq!(c.level, 1);
        }
        assert_eq!(ch[3].lineage, vec![3]);
    }

    #[test]
    fn radius_derivatives_on_annulus() {
        // u = x on an annulus sector: grad = (1, 0), laplacian 0.
        let g = GeometryMap::AnnulusSector { center: [0.0, 0.0], r_inner: 1.0, r_outer: 2.0, theta0: 0.2, theta1: 1.1 };
        let kv = KnotVector::uniform(2, 4);
        let patch = Patch::new(g, [kv.clone(), kv], 1.0).unwrap();
        // Quadratic polar data cannot represent x exactly; use the Laplacian of
        // the radius r instead: u = r gives lap = 1/r.
        let n = patch.num_basis();
        let gr = patch.knots[0].greville();
        let mut c = vec![0.0; n[0] * n[1]];
        for j in 0..n[1] {
            for i in 0..n[0] {
                c[i + n[0] * j] = 1.0 + gr[i];
            }
        }
        let (u, gx, lap) = eval_physical(&patch, &c, [0.3, 0.6]).unwrap();
        let x = patch.geometry.eval([0.3, 0.6]).unwrap();
        let r = hypot(x[0], x[1]);
        assert!((u - r).abs() < 1e-12);
        assert!((gx[0] - x[0] / r).abs() < 1e-12 && (gx[1] - x[1] / r).abs() < 1e-12);
        assert!((lap - 1.0 / r).abs() < 1e-10, "{lap}");
    }
}

//! Preconditioners for the dual problem: scaled Dirichlet with selection
//! scaling and the deluxe-type edge preconditioner.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::coupling::InterfaceCoupling;
use crate::geometry::MultiPatchTopology;
use crate::ieti::IetiOperator;
use crate::linalg::{DenseCholesky, DenseMatrix, LinalgError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PrecondError {
    #[error("edge Schur block of interface {interface} is singular")]
    SingularEdgeBlock { interface: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = core::result::Result<T, PrecondError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PreconditionerKind {
    Selection,
    Deluxe,
    None,
}

/// Diagonal 0/1 scaling that keeps exactly the refined-side DOF of every
/// dual constraint, stored per patch over skeleton indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionScaling {
    diagonal: Vec<Vec<bool>>,
}

impl SelectionScaling {
    pub fn new(op: &IetiOperator) -> Self {
        let cons = op.constraints();
        let mut diagonal: Vec<Vec<bool>> =
            (0..op.num_patches()).map(|k| vec![false; op.schur(k).n_skeleton()]).collect();
        for &(k, d, _) in &cons.selection {
            diagonal[k][d - op.schur(k).n_interior()] = true;
        }
        Self { diagonal }
    }

    pub fn diagonal(&self, k: usize) -> &[bool] {
        &self.diagonal[k]
    }

    fn apply_in_place(&self, k: usize, v: &mut [f64]) {
        for (x, &keep) in v.iter_mut().zip(&self.diagonal[k]) {
            if !keep {
                *x = 0.0;
            }
        }
    }

    /// `D^(k) B^(k)^T mu` for every patch.
    pub fn scaled_transpose(&self, op: &IetiOperator, mu: &[f64]) -> Vec<Vec<f64>> {
        (0..op.num_patches())
            .map(|k| {
                let mut v = op.dual_transpose(k, mu);
                self.apply_in_place(k, &mut v);
                v
            })
            .collect()
    }
}

/// `B_G D S D^T B_G^T mu`.
pub fn apply_scaled_dirichlet(op: &IetiOperator, scaling: &SelectionScaling, mu: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; mu.len()];
    for (k, v) in scaling.scaled_transpose(op, mu).into_iter().enumerate() {
        if v.iter().all(|&x| x == 0.0) {
            continue;
        }
        let mut w = op.skeleton_schur_apply(k, &v);
        scaling.apply_in_place(k, &mut w);
        op.dual_apply_add(k, &w, &mut out);
    }
    out
}

/// `(S_f^{-1} + P S_c^{-1} P^T)^{-1}` for SPD edge blocks and a prolongation
/// `P` (`n_f x n_c`).
pub fn combine_edge_blocks(s_fine: &DenseMatrix, s_coarse: &DenseMatrix, p: &DenseMatrix) -> core::result::Result<DenseMatrix, LinalgError> {
    let nf = s_fine.rows();
    let cf = DenseCholesky::factor(s_fine)?;
    let cc = DenseCholesky::factor(s_coarse)?;
    let mut t = DenseMatrix::zeros(nf, nf);
    let mut e = vec![0.0; nf];
    for j in 0..nf {
        e.fill(0.0);
        e[j] = 1.0;
        cf.solve_in_place(&mut e)?;
        t.set_column(j, &e);
    }
    // P S_c^{-1} P^T, one column of P^T at a time.
    let pt = p.transpose();
    let mut x = DenseMatrix::zeros(p.cols(), nf);
    for j in 0..nf {
        let mut c = pt.column(j);
        cc.solve_in_place(&mut c)?;
        x.set_column(j, &c);
    }
    t.add_scaled(1.0, &p.matmul(&x)?)?;
    let ct = DenseCholesky::factor(&t)?;
    let mut out = DenseMatrix::zeros(nf, nf);
    for j in 0..nf {
        e.fill(0.0);
        e[j] = 1.0;
        ct.solve_in_place(&mut e)?;
        out.set_column(j, &e);
    }
    for i in 0..nf {
        for j in 0..i {
            let v = 0.5 * (out[(i, j)] + out[(j, i)]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok(out)
}

/// Combined block of one interface, acting on its multipliers.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeBlock {
    pub coupling: usize,
    pub multipliers: Vec<usize>,
    pub combined: DenseMatrix,
}

/// Per-interface blocks of the deluxe-type preconditioner. Both edge Schur
/// blocks are principal submatrices of the skeleton Schur complements on the
/// open edge, i.e. without the corner functions of either edge.
#[derive(Debug, Clone, PartialEq)]
pub struct DeluxeEdgeBlocks {
    pub blocks: Vec<EdgeBlock>,
}

impl DeluxeEdgeBlocks {
    pub fn new(op: &IetiOperator, couplings: &[InterfaceCoupling]) -> Result<Self> {
        let cons = op.constraints();
        let layouts = op.layouts();
        let mut per_coupling: Vec<Vec<usize>> = vec![Vec::new(); couplings.len()];
        for (m, &i) in cons.dual_rows.iter().enumerate() {
            per_coupling[cons.rows[i].coupling].push(m);
        }
        let mut blocks = Vec::new();
        for (ci, c) in couplings.iter().enumerate() {
            let mults = &per_coupling[ci];
            if mults.is_empty() {
                continue;
            }
            let (kf, kc) = (c.fine.patch, c.coarse.patch);
            let (nif, nic) = (op.schur(kf).n_interior(), op.schur(kc).n_interior());
            let lc = &layouts[kc];
            let trace = lc.edge_trace(c.coarse.side);
            let corners = [lc.local(trace[0]), lc.local(*trace.last().unwrap())];
            let fine: Vec<usize> = mults.iter().map(|&m| cons.rows[cons.dual_rows[m]].fine_dof() - nif).collect();
            let mut coarse: Vec<usize> = Vec::new();
            for &m in mults {
                for &(_, d, _) in &cons.rows[cons.dual_rows[m]].entries[1..] {
                    if !corners.contains(&Some(d)) && !coarse.contains(&(d - nic)) {
                        coarse.push(d - nic);
                    }
                }
            }
            coarse.sort_unstable();
            let mut p = DenseMatrix::zeros(fine.len(), coarse.len());
            for (a, &m) in mults.iter().enumerate() {
                for &(_, d, v) in &cons.rows[cons.dual_rows[m]].entries[1..] {
                    if let Ok(b) = coarse.binary_search(&(d.wrapping_sub(nic))) {
                        p[(a, b)] = -v;
                    }
                }
            }
            let s_f = op.schur(kf).matrix().select(&fine, &fine);
            let s_c = op.schur(kc).matrix().select(&coarse, &coarse);
            let combined = if coarse.is_empty() {
                combine_fine_only(&s_f)
            } else {
                combine_edge_blocks(&s_f, &s_c, &p)
            }
            .map_err(|_| PrecondError::SingularEdgeBlock { interface: c.interface })?;
            blocks.push(EdgeBlock { coupling: ci, multipliers: mults.clone(), combined });
        }
        Ok(Self { blocks })
    }

    pub fn apply(&self, mu: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; mu.len()];
        for b in &self.blocks {
            let x: Vec<f64> = b.multipliers.iter().map(|&m| mu[m]).collect();
            let y = b.combined.matvec(&x).expect("block size");
            for (&m, v) in b.multipliers.iter().zip(&y) {
                out[m] += v;
            }
        }
        out
    }
}

fn combine_fine_only(s_f: &DenseMatrix) -> core::result::Result<DenseMatrix, LinalgError> {
    DenseCholesky::factor(s_f)?;
    Ok(s_f.clone())
}

/// A built preconditioner for one operator.
#[derive(Debug, Clone)]
pub enum Preconditioner {
    Identity,
    ScaledDirichlet(SelectionScaling),
    Deluxe(DeluxeEdgeBlocks),
}

impl Preconditioner {
    pub fn build(kind: PreconditionerKind, op: &IetiOperator, couplings: &[InterfaceCoupling]) -> Result<Self> {
        Ok(match kind {
            PreconditionerKind::None => Self::Identity,
            PreconditionerKind::Selection => Self::ScaledDirichlet(SelectionScaling::new(op)),
            PreconditionerKind::Deluxe => Self::Deluxe(DeluxeEdgeBlocks::new(op, couplings)?),
        })
    }

    pub fn apply(&self, op: &IetiOperator, mu: &[f64]) -> Vec<f64> {
        match self {
            Self::Identity => mu.to_vec(),
            Self::ScaledDirichlet(s) => apply_scaled_dirichlet(op, s, mu),
            Self::Deluxe(d) => d.apply(mu),
        }
    }
}

/// `D B_G^T B_G w` per patch for skeleton data `w`.
pub fn selection_jump(op: &IetiOperator, scaling: &SelectionScaling, w: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut bw = vec![0.0; op.num_multipliers()];
    for (k, wk) in w.iter().enumerate() {
        op.dual_apply_add(k, wk, &mut bw);
    }
    scaling.scaled_transpose(op, &bw)
}

/// Sampled traces on one interface: the image `D B^T B w` on both sides and
/// the jump `w_fine - w_coarse`.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceJump {
    pub coupling: usize,
    /// Fine edge parameters.
    pub params: Vec<f64>,
    pub image_fine: Vec<f64>,
    pub image_coarse: Vec<f64>,
    pub jump: Vec<f64>,
}

/// Evaluates a skeleton function of patch `k` on one of its edges.
pub fn eval_skeleton_trace(
    op: &IetiOperator,
    topo: &MultiPatchTopology,
    k: usize,
    side: crate::geometry::Side,
    w: &[f64],
    t: f64,
) -> f64 {
    let layout = &op.layouts()[k];
    let ni = op.schur(k).n_interior();
    let coeffs: Vec<f64> =
        layout.edge_dofs(side).into_iter().map(|d| d.map_or(0.0, |d| w[d - ni])).collect();
    topo.patches[k].edge_knots(side).eval_spline(&coeffs, t).expect("edge parameter in [0, 1]")
}

/// Samples `D B_G^T B_G w` and the trace jump of `w` at `samples` points per interface.
pub fn jump_check(
    op: &IetiOperator,
    topo: &MultiPatchTopology,
    couplings: &[InterfaceCoupling],
    w: &[Vec<f64>],
    samples: usize,
) -> Vec<InterfaceJump> {
    let scaling = SelectionScaling::new(op);
    let v = selection_jump(op, &scaling, w);
    couplings
        .iter()
        .enumerate()
        .map(|(ci, c)| {
            let params: Vec<f64> = (0..samples).map(|i| (i as f64 + 0.5) / samples as f64).collect();
            let (kf, kc) = (c.fine.patch, c.coarse.patch);
            let mut out = InterfaceJump { coupling: ci, params: params.clone(), image_fine: vec![], image_coarse: vec![], jump: vec![] };
            for &t in &params {
                let s = c.coarse_param(t);
                out.image_fine.push(eval_skeleton_trace(op, topo, kf, c.fine.side, &v[kf], t));
                out.image_coarse.push(eval_skeleton_trace(op, topo, kc, c.coarse.side, &v[kc], s));
                let wf = eval_skeleton_trace(op, topo, kf, c.fine.side, &w[kf], t);
                let wc = eval_skeleton_trace(op, topo, kc, c.coarse.side, &w[kc], s);
                out.jump.push(wf - wc);
            }
            out
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_identity_blocks_halve() {
        let i = DenseMatrix::identity(3);
        let m = combine_edge_blocks(&i, &i, &i).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                let e = if a == b { 0.5 } else { 0.0 };
                assert!((m[(a, b)] - e).abs() < 1e-15);
            }
        }
    }
}

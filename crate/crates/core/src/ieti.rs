//! Dual-primal tearing and interconnecting: skeleton Schur complements, local
//! saddle systems, the primal coarse problem and the reduced operator `F`.
//!
//! Interior unknowns are condensed out first. Constraints only touch
//! boundary functions, so every local saddle system is posed on the patch
//! skeleton with the dense Schur complement in place of the stiffness matrix.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::assembly::{assemble_local, AssemblyError, DofLayout, LocalSystem};
use crate::coupling::{build_constraints, ConstraintSystem, CouplingError, InterfaceCoupling};
use crate::geometry::{MultiPatchTopology, Point};
use crate::linalg::ordering::tensor_nested_dissection;
use crate::linalg::{
    check_len, factor_spd, factor_spd_with_ordering, BunchKaufman, DenseCholesky, DenseMatrix,
    LinalgError, SparseMatrix, SymmetricFactorization, DENSE_CUTOFF,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IetiError {
    #[error("local saddle-point system of patch {patch} is singular")]
    SingularLocalSaddle { patch: usize },
    #[error("coarse primal matrix is singular")]
    SingularCoarse,
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Coupling(#[from] CouplingError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = core::result::Result<T, IetiError>;

/// `S = A_GG - A_GI A_II^{-1} A_IG` of one patch, stored densely, together
/// with the interior factorization for harmonic extensions.
#[derive(Debug, Clone)]
pub struct SkeletonSchur {
    n_interior: usize,
    a_ii: Option<SymmetricFactorization>,
    a_ig: SparseMatrix,
    a_gi: SparseMatrix,
    schur: DenseMatrix,
}

impl SkeletonSchur {
    /// Factors the interior block of `sys`. The interior functions of
    /// `layout` form a lexicographic grid, which gives the elimination order.
    pub fn new(sys: &LocalSystem, layout: &DofLayout, degree: usize) -> Result<Self> {
        let ni = sys.n_interior;
        let a_ig = sys.a_ig();
        let a_gi = a_ig.transpose();
        let mut schur = sys.a_gg().to_dense();
        let a_ii = if ni == 0 {
            None
        } else {
            let a = sys.a_ii();
            let f = if ni < DENSE_CUTOFF {
                factor_spd(&a)?
            } else {
                let [n1, n2] = layout.shape();
                factor_spd_with_ordering(&a, tensor_nested_dissection(n1 - 2, n2 - 2, degree))?
            };
            let corr = match f.as_sparse_cholesky() {
                Some(chol) => {
                    let cols: Vec<Vec<(usize, f64)>> = (0..a_gi.rows()).map(|g| a_gi.row(g).collect()).collect();
                    chol.inverse_congruence(&cols)
                }
                None => {
                    let ng = a_gi.rows();
                    let mut c = DenseMatrix::zeros(ng, ng);
                    let mut col = vec![0.0; ni];
                    for j in 0..ng {
                        col.fill(0.0);
                        for (i, v) in a_gi.row(j) {
                            col[i] = v;
                        }
                        f.solve_in_place(&mut col)?;
                        let y = a_gi.spmv(&col)?;
                        c.set_column(j, &y);
                    }
                    c
                }
            };
            schur.add_scaled(-1.0, &corr)?;
            Some(f)
        };
        let n = schur.rows();
        for i in 0..n {
            for j in 0..i {
                let v = 0.5 * (schur[(i, j)] + schur[(j, i)]);
                schur[(i, j)] = v;
                schur[(j, i)] = v;
            }
        }
        Ok(Self { n_interior: ni, a_ii, a_ig, a_gi, schur })
    }

    pub fn n_interior(&self) -> usize {
        self.n_interior
    }

    pub fn n_skeleton(&self) -> usize {
        self.schur.rows()
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.schur
    }

    pub fn apply(&self, w: &[f64]) -> Vec<f64> {
        self.schur.matvec(w).expect("skeleton length")
    }

    /// `A_II^{-1} (f_I - A_IG w)`.
    pub fn interior_solve(&self, f_interior: &[f64], w: &[f64]) -> Vec<f64> {
        let mut x = f_interior.to_vec();
        if let Some(f) = &self.a_ii {
            let t = self.a_ig.spmv(w).expect("skeleton length");
            for (a, b) in x.iter_mut().zip(&t) {
                *a -= b;
            }
            f.solve_in_place(&mut x).expect("interior length");
        }
        x
    }

    /// Discrete harmonic extension of skeleton values `w`, as a full local
    /// vector in interior-first order.
    pub fn harmonic_extend(&self, w: &[f64]) -> Vec<f64> {
        let mut u = self.interior_solve(&vec![0.0; self.n_interior], w);
        u.extend_from_slice(w);
        u
    }

    /// `f_G - A_GI A_II^{-1} f_I` for a full local load vector.
    pub fn condense(&self, f: &[f64]) -> Vec<f64> {
        let ni = self.n_interior;
        let mut g = f[ni..].to_vec();
        if let Some(fac) = &self.a_ii {
            let x = fac.solve(&f[..ni]).expect("interior length");
            let t = self.a_gi.spmv(&x).expect("interior length");
            for (a, b) in g.iter_mut().zip(&t) {
                *a -= b;
            }
        }
        g
    }
}

/// `[[S, C^T], [C, 0]]` of one patch, with `C` the vertex evaluation rows on
/// the skeleton.
#[derive(Debug, Clone)]
pub struct LocalSaddle {
    factor: Option<BunchKaufman>,
    n_skeleton: usize,
    n_primal: usize,
}

impl LocalSaddle {
    /// `c` holds the primal rows as `(skeleton index, value)` lists.
    pub fn new(patch: usize, schur: &DenseMatrix, c: &[Vec<(usize, f64)>]) -> Result<Self> {
        let ng = schur.rows();
        let np = c.len();
        let n = ng + np;
        if n == 0 {
            return Ok(Self { factor: None, n_skeleton: 0, n_primal: 0 });
        }
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..ng {
            m.row_mut(i)[..ng].copy_from_slice(schur.row(i));
        }
        for (r, row) in c.iter().enumerate() {
            for &(g, v) in row {
                m[(ng + r, g)] = v;
                m[(g, ng + r)] = v;
            }
        }
        let factor = BunchKaufman::factor(&m).map_err(|e| match e {
            LinalgError::SingularMatrix { .. } => IetiError::SingularLocalSaddle { patch },
            other => other.into(),
        })?;
        let inertia = factor.inertia();
        if inertia.positive != ng || inertia.negative != np {
            return Err(IetiError::SingularLocalSaddle { patch });
        }
        Ok(Self { factor: Some(factor), n_skeleton: ng, n_primal: np })
    }

    pub fn n_skeleton(&self) -> usize {
        self.n_skeleton
    }

    pub fn n_primal(&self) -> usize {
        self.n_primal
    }

    /// Solves with right-hand side `[r; q]` and returns `(x, mu)`.
    pub fn solve(&self, r: &[f64], q: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut b = r.to_vec();
        b.extend_from_slice(q);
        if let Some(f) = &self.factor {
            f.solve_in_place(&mut b).expect("saddle length");
        }
        let mu = b.split_off(self.n_skeleton);
        (b, mu)
    }

    /// Skeleton part of the solution for a zero constraint right-hand side.
    pub fn solve_skeleton(&self, r: &[f64]) -> Vec<f64> {
        self.solve(r, &vec![0.0; self.n_primal]).0
    }
}

/// Energy-minimal functions with unit value at one primal vertex and zero at
/// the others, and the assembled coarse problem.
#[derive(Debug, Clone)]
pub struct PrimalBasis {
    /// Skeleton part of `Psi^(k)`, `n_skeleton x n_primal^(k)`.
    pub psi: Vec<DenseMatrix>,
    /// Global primal index of every local primal column.
    pub restriction: Vec<Vec<usize>>,
    /// `A_Pi = sum R^T Psi^T S Psi R`.
    pub coarse: DenseMatrix,
    coarse_factor: DenseCholesky,
    /// `B Psi` as a sparse `n_dual x n_primal` matrix.
    pub b_pi: SparseMatrix,
}

impl PrimalBasis {
    pub fn coarse_solve(&self, x: &mut [f64]) {
        self.coarse_factor.solve_in_place(x).expect("primal length");
    }
}

/// Solves `A~ [Psi; Delta] = [0; I]` per patch and assembles `A_Pi` and `B_Pi`.
pub fn build_primal_basis(
    schurs: &[SkeletonSchur],
    saddles: &[LocalSaddle],
    constraints: &ConstraintSystem,
    dual: &[Vec<(usize, usize, f64)>],
) -> Result<PrimalBasis> {
    let np = constraints.num_primal();
    let mut coarse = DenseMatrix::zeros(np, np);
    let mut psi = Vec::with_capacity(schurs.len());
    let mut restriction = Vec::with_capacity(schurs.len());
    let mut triplets = Vec::new();
    for (k, (s, sad)) in schurs.iter().zip(saddles).enumerate() {
        let ng = s.n_skeleton();
        let r: Vec<usize> = constraints.primal[k].iter().map(|p| p.primal).collect();
        let npk = r.len();
        let mut p = DenseMatrix::zeros(ng, npk);
        let zero = vec![0.0; ng];
        let mut e = vec![0.0; npk];
        for j in 0..npk {
            e.fill(0.0);
            e[j] = 1.0;
            let (x, _) = sad.solve(&zero, &e);
            p.set_column(j, &x);
        }
        let sp = s.matrix().matmul(&p)?;
        let local = p.transpose().matmul(&sp)?;
        for a in 0..npk {
            for b in 0..npk {
                coarse[(r[a], r[b])] += 0.5 * (local[(a, b)] + local[(b, a)]);
            }
        }
        for &(m, g, v) in &dual[k] {
            for j in 0..npk {
                let w = v * p[(g, j)];
                if w != 0.0 {
                    triplets.push((m, r[j], w));
                }
            }
        }
        psi.push(p);
        restriction.push(r);
    }
    let coarse_factor = DenseCholesky::factor(&coarse).map_err(|_| IetiError::SingularCoarse)?;
    let b_pi = SparseMatrix::from_triplets(constraints.num_dual(), np, &triplets)?;
    Ok(PrimalBasis { psi, restriction, coarse, coarse_factor, b_pi })
}

/// Assembles every patch with the Dirichlet sides of `topo` removed.
pub fn assemble_patches(
    topo: &MultiPatchTopology,
    f: &dyn Fn(Point) -> f64,
) -> Result<(Vec<DofLayout>, Vec<LocalSystem>)> {
    let mut layouts = Vec::with_capacity(topo.num_patches());
    let mut systems = Vec::with_capacity(topo.num_patches());
    for (k, patch) in topo.patches.iter().enumerate() {
        let layout = DofLayout::for_patch(patch, topo.dirichlet[k]);
        systems.push(assemble_local(patch, &layout, f)?);
        layouts.push(layout);
    }
    Ok((layouts, systems))
}

/// The reduced dual problem `F lambda = d` and everything needed to recover
/// the patch solutions from `lambda`.
#[derive(Debug, Clone)]
pub struct IetiOperator {
    layouts: Vec<DofLayout>,
    constraints: ConstraintSystem,
    schurs: Vec<SkeletonSchur>,
    saddles: Vec<LocalSaddle>,
    basis: PrimalBasis,
    /// Dual entries per patch as `(multiplier, skeleton index, value)`.
    dual: Vec<Vec<(usize, usize, f64)>>,
    loads: Vec<Vec<f64>>,
    condensed: Vec<Vec<f64>>,
}

impl IetiOperator {
    /// Assembles, couples and factors the problem `-div(nu grad u) = f` with
    /// homogeneous Dirichlet data on the outer boundary.
    pub fn new(topo: &MultiPatchTopology, couplings: &[InterfaceCoupling], f: &dyn Fn(Point) -> f64) -> Result<Self> {
        let (layouts, systems) = assemble_patches(topo, f)?;
        let constraints = build_constraints(topo, couplings, &layouts);
        let degrees: Vec<usize> = topo.patches.iter().map(|p| p.degree()).collect();
        Self::from_parts(layouts, &systems, constraints, &degrees)
    }

    pub fn from_parts(
        layouts: Vec<DofLayout>,
        systems: &[LocalSystem],
        constraints: ConstraintSystem,
        degrees: &[usize],
    ) -> Result<Self> {
        let n = layouts.len();
        let mut schurs = Vec::with_capacity(n);
        let mut saddles = Vec::with_capacity(n);
        let mut dual = Vec::with_capacity(n);
        let mut condensed = Vec::with_capacity(n);
        for k in 0..n {
            let s = SkeletonSchur::new(&systems[k], &layouts[k], degrees[k])?;
            let ni = s.n_interior();
            let c: Vec<Vec<(usize, f64)>> = constraints.primal[k]
                .iter()
                .map(|row| row.entries.iter().map(|&(d, v)| (skeleton_index(d, ni), v)).collect())
                .collect();
            saddles.push(LocalSaddle::new(k, s.matrix(), &c)?);
            dual.push(
                constraints.patch_entries[k].iter().map(|&(m, d, v)| (m, skeleton_index(d, ni), v)).collect(),
            );
            condensed.push(s.condense(&systems[k].rhs));
            schurs.push(s);
        }
        let basis = build_primal_basis(&schurs, &saddles, &constraints, &dual)?;
        let loads = systems.iter().map(|s| s.rhs.clone()).collect();
        Ok(Self { layouts, constraints, schurs, saddles, basis, dual, loads, condensed })
    }

    pub fn num_multipliers(&self) -> usize {
        self.constraints.num_dual()
    }

    pub fn num_primal(&self) -> usize {
        self.constraints.num_primal()
    }

    pub fn num_patches(&self) -> usize {
        self.layouts.len()
    }

    /// Total number of patch-local unknowns.
    pub fn num_dofs(&self) -> usize {
        self.constraints.num_dofs()
    }

    pub fn layouts(&self) -> &[DofLayout] {
        &self.layouts
    }

    pub fn constraints(&self) -> &ConstraintSystem {
        &self.constraints
    }

    pub fn schur(&self, k: usize) -> &SkeletonSchur {
        &self.schurs[k]
    }

    pub fn saddle(&self, k: usize) -> &LocalSaddle {
        &self.saddles[k]
    }

    pub fn primal_basis(&self) -> &PrimalBasis {
        &self.basis
    }

    /// `B_G^(k)` entries as `(multiplier, skeleton index, value)`.
    pub fn dual_entries(&self, k: usize) -> &[(usize, usize, f64)] {
        &self.dual[k]
    }

    pub fn skeleton_schur_apply(&self, k: usize, w: &[f64]) -> Vec<f64> {
        self.schurs[k].apply(w)
    }

    pub fn harmonic_extend(&self, k: usize, w: &[f64]) -> Vec<f64> {
        self.schurs[k].harmonic_extend(w)
    }

    /// `B^(k)^T lambda` on the skeleton of patch `k`.
    pub fn dual_transpose(&self, k: usize, lambda: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; self.schurs[k].n_skeleton()];
        for &(m, g, v) in &self.dual[k] {
            r[g] += v * lambda[m];
        }
        r
    }

    /// Adds `B^(k) x` to `out`.
    pub fn dual_apply_add(&self, k: usize, x: &[f64], out: &mut [f64]) {
        for &(m, g, v) in &self.dual[k] {
            out[m] += v * x[g];
        }
    }

    pub fn apply_f(&self, lambda: &[f64]) -> Result<Vec<f64>> {
        check_len(self.num_multipliers(), lambda.len())?;
        let mut y = vec![0.0; lambda.len()];
        for k in 0..self.num_patches() {
            let r = self.dual_transpose(k, lambda);
            let x = self.saddles[k].solve_skeleton(&r);
            self.dual_apply_add(k, &x, &mut y);
        }
        let mut z = vec![0.0; self.num_primal()];
        self.basis.b_pi.spmv_transpose_add(lambda, &mut z)?;
        self.basis.coarse_solve(&mut z);
        self.basis.b_pi.spmv_add(&z, &mut y)?;
        Ok(y)
    }

    /// `Psi^T f`, assembled over the primal vertices.
    fn primal_load(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.num_primal()];
        for k in 0..self.num_patches() {
            let t = self.basis.psi[k].matvec_transpose(&self.condensed[k]).expect("skeleton length");
            for (j, &gj) in self.basis.restriction[k].iter().enumerate() {
                out[gj] += t[j];
            }
        }
        out
    }

    pub fn rhs(&self) -> Vec<f64> {
        let mut y = vec![0.0; self.num_multipliers()];
        for k in 0..self.num_patches() {
            let x = self.saddles[k].solve_skeleton(&self.condensed[k]);
            self.dual_apply_add(k, &x, &mut y);
        }
        let mut z = self.primal_load();
        self.basis.coarse_solve(&mut z);
        self.basis.b_pi.spmv_add(&z, &mut y).expect("primal length");
        y
    }

    /// Primal vertex values `A_Pi^{-1} (Psi^T f - B_Pi^T lambda)`.
    pub fn primal_values(&self, lambda: &[f64]) -> Vec<f64> {
        let mut z = self.primal_load();
        let mut t = vec![0.0; self.num_primal()];
        self.basis.b_pi.spmv_transpose_add(lambda, &mut t).expect("multiplier length");
        for (a, b) in z.iter_mut().zip(&t) {
            *a -= b;
        }
        self.basis.coarse_solve(&mut z);
        z
    }

    /// Patch coefficient vectors (layout numbering) for multipliers `lambda`.
    pub fn reconstruct(&self, lambda: &[f64]) -> Result<Vec<Vec<f64>>> {
        check_len(self.num_multipliers(), lambda.len())?;
        let u_pi = self.primal_values(lambda);
        let mut out = Vec::with_capacity(self.num_patches());
        for k in 0..self.num_patches() {
            let mut r = self.condensed[k].clone();
            let bt = self.dual_transpose(k, lambda);
            for (a, b) in r.iter_mut().zip(&bt) {
                *a -= b;
            }
            let mut x = self.saddles[k].solve_skeleton(&r);
            let psi = &self.basis.psi[k];
            for (j, &gj) in self.basis.restriction[k].iter().enumerate() {
                let c = u_pi[gj];
                for (g, xg) in x.iter_mut().enumerate() {
                    *xg += psi[(g, j)] * c;
                }
            }
            let ni = self.schurs[k].n_interior();
            let mut u = self.schurs[k].interior_solve(&self.loads[k][..ni], &x);
            u.extend_from_slice(&x);
            out.push(u);
        }
        Ok(out)
    }
}

fn skeleton_index(dof: usize, n_interior: usize) -> usize {
    assert!(dof >= n_interior, "constraint on an interior function");
    dof - n_interior
}

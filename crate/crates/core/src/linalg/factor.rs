use alloc::vec;
use alloc::vec::Vec;

use super::ordering::nested_dissection;
use super::{
    check_len, BunchKaufman, DenseCholesky, DenseMatrix, LinalgError, Result, SparseCholesky,
    SparseMatrix,
};

/// Systems below this size are factored densely.
pub const DENSE_CUTOFF: usize = 64;

/// Counts of positive, negative and zero pivots.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Inertia {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

/// A factorization of a symmetric matrix that can be shared and reused.
#[derive(Debug, Clone)]
pub struct SymmetricFactorization {
    n: usize,
    kind: Kind,
}

#[derive(Debug, Clone)]
enum Kind {
    DenseCholesky(DenseCholesky),
    DenseLdl(BunchKaufman),
    SparseCholesky(SparseCholesky),
    Block(Box<BlockLdl>),
}

use alloc::boxed::Box;

/// Sparse Cholesky on the pivot-safe leading block and dense LDL^T on the
/// Schur complement of the trailing block.
#[derive(Debug, Clone)]
struct BlockLdl {
    lead: Vec<usize>,
    trail: Vec<usize>,
    lead_fact: SparseCholesky,
    /// A_TL in leading/trailing local numbering.
    a_tl: SparseMatrix,
    schur: BunchKaufman,
}

impl SymmetricFactorization {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn inertia(&self) -> Inertia {
        match &self.kind {
            Kind::DenseCholesky(_) | Kind::SparseCholesky(_) => {
                Inertia { positive: self.n, negative: 0, zero: 0 }
            }
            Kind::DenseLdl(f) => f.inertia(),
            Kind::Block(b) => {
                let s = b.schur.inertia();
                Inertia { positive: s.positive + b.lead.len(), ..s }
            }
        }
    }

    /// Elimination order `perm[new] = old`.
    pub fn permutation(&self) -> Vec<usize> {
        match &self.kind {
            Kind::DenseCholesky(_) => (0..self.n).collect(),
            Kind::DenseLdl(f) => f.permutation().to_vec(),
            Kind::SparseCholesky(f) => f.permutation().to_vec(),
            Kind::Block(b) => {
                let mut p: Vec<usize> = b.lead_fact.permutation().iter().map(|&i| b.lead[i]).collect();
                p.extend(b.schur.permutation().iter().map(|&i| b.trail[i]));
                p
            }
        }
    }

    pub fn solve_in_place(&self, x: &mut [f64]) -> Result<()> {
        check_len(self.n, x.len())?;
        match &self.kind {
            Kind::DenseCholesky(f) => f.solve_in_place(x),
            Kind::DenseLdl(f) => f.solve_in_place(x),
            Kind::SparseCholesky(f) => f.solve_in_place(x),
            Kind::Block(b) => b.solve_in_place(x),
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }

    /// Sparse Cholesky factor, if this is one.
    pub fn as_sparse_cholesky(&self) -> Option<&SparseCholesky> {
        match &self.kind {
            Kind::SparseCholesky(f) => Some(f),
            _ => None,
        }
    }
}

impl BlockLdl {
    fn solve_in_place(&self, x: &mut [f64]) -> Result<()> {
        let mut yl: Vec<f64> = self.lead.iter().map(|&i| x[i]).collect();
        self.lead_fact.solve_in_place(&mut yl)?;
        let mut zt: Vec<f64> = self.trail.iter().map(|&i| x[i]).collect();
        let t = self.a_tl.spmv(&yl)?;
        for (z, v) in zt.iter_mut().zip(&t) {
            *z -= v;
        }
        self.schur.solve_in_place(&mut zt)?;
        let mut corr = vec![0.0; self.lead.len()];
        self.a_tl.spmv_transpose_add(&zt, &mut corr)?;
        self.lead_fact.solve_in_place(&mut corr)?;
        for (k, &i) in self.lead.iter().enumerate() {
            x[i] = yl[k] - corr[k];
        }
        for (k, &i) in self.trail.iter().enumerate() {
            x[i] = zt[k];
        }
        Ok(())
    }
}

pub fn factor_dense_spd(m: &DenseMatrix) -> Result<SymmetricFactorization> {
    Ok(SymmetricFactorization { n: m.rows(), kind: Kind::DenseCholesky(DenseCholesky::factor(m)?) })
}

pub fn factor_dense_indefinite(m: &DenseMatrix) -> Result<SymmetricFactorization> {
    Ok(SymmetricFactorization { n: m.rows(), kind: Kind::DenseLdl(BunchKaufman::factor(m)?) })
}

/// Cholesky factorization of a sparse SPD matrix with a nested dissection ordering.
pub fn factor_spd(m: &SparseMatrix) -> Result<SymmetricFactorization> {
    check_len(m.rows(), m.cols())?;
    if m.rows() < DENSE_CUTOFF {
        return factor_dense_spd(&m.to_dense());
    }
    factor_spd_with_ordering(m, nested_dissection(m))
}

/// Sparse Cholesky with a caller supplied ordering `perm[new] = old`.
pub fn factor_spd_with_ordering(m: &SparseMatrix, perm: Vec<usize>) -> Result<SymmetricFactorization> {
    Ok(SymmetricFactorization { n: m.rows(), kind: Kind::SparseCholesky(SparseCholesky::factor(m, perm)?) })
}

/// Symmetric indefinite factorization. Small systems use dense Bunch–Kaufman;
/// larger ones eliminate the rows away from zero diagonals with sparse Cholesky
/// and pivot the remaining Schur complement densely.
pub fn factor_symmetric_indefinite(m: &SparseMatrix) -> Result<SymmetricFactorization> {
    check_len(m.rows(), m.cols())?;
    let n = m.rows();
    if n < DENSE_CUTOFF {
        return factor_dense_indefinite(&m.to_dense());
    }
    let scale = m.max_abs();
    let diag = m.diagonal();
    let mut trailing = vec![false; n];
    for i in 0..n {
        if diag[i] <= 1e-12 * scale {
            trailing[i] = true;
            for (j, _) in m.row(i) {
                trailing[j] = true;
            }
        }
    }
    let lead: Vec<usize> = (0..n).filter(|&i| !trailing[i]).collect();
    let trail: Vec<usize> = (0..n).filter(|&i| trailing[i]).collect();
    if lead.is_empty() {
        return factor_dense_indefinite(&m.to_dense());
    }
    let mut lead_map = vec![None; n];
    let mut trail_map = vec![None; n];
    for (k, &i) in lead.iter().enumerate() {
        lead_map[i] = Some(k);
    }
    for (k, &i) in trail.iter().enumerate() {
        trail_map[i] = Some(k);
    }
    let a_ll = m.submatrix(&lead, &lead_map, lead.len());
    let lead_fact = match SparseCholesky::factor(&a_ll, nested_dissection(&a_ll)) {
        Ok(f) => f,
        Err(LinalgError::NotPositiveDefinite { .. }) => {
            return factor_dense_indefinite(&m.to_dense());
        }
        Err(e) => return Err(e),
    };
    let a_tl = m.submatrix(&trail, &lead_map, lead.len());
    let a_tt = m.submatrix(&trail, &trail_map, trail.len()).to_dense();
    let cols: Vec<Vec<(usize, f64)>> = (0..trail.len()).map(|t| a_tl.row(t).collect()).collect();
    let mut schur = a_tt;
    let corr = lead_fact.inverse_congruence(&cols);
    schur.add_scaled(-1.0, &corr)?;
    let schur = BunchKaufman::factor(&schur).map_err(|e| match e {
        LinalgError::SingularMatrix { index } => LinalgError::SingularMatrix { index: trail[index.min(trail.len() - 1)] },
        other => other,
    })?;
    Ok(SymmetricFactorization { n, kind: Kind::Block(Box::new(BlockLdl { lead, trail, lead_fact, a_tl, schur })) })
}

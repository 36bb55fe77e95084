use alloc::vec;
use alloc::vec::Vec;

use super::{check_len, DenseMatrix, LinalgError, Result, SparseMatrix, PIVOT_TOL};
use crate::math::sqrt;

const NONE: usize = usize::MAX;

/// Up-looking sparse Cholesky `P A P^T = L L^T` with `L` stored by columns,
/// diagonal entry first in every column.
#[derive(Debug, Clone)]
pub struct SparseCholesky {
    n: usize,
    perm: Vec<usize>,
    pinv: Vec<usize>,
    parent: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
}

impl SparseCholesky {
    /// Factors the symmetric matrix `a` under the ordering `perm[new] = old`.
    /// Only entries that land in the upper triangle of the permuted matrix are read.
    pub fn factor(a: &SparseMatrix, perm: Vec<usize>) -> Result<Self> {
        check_len(a.rows(), a.cols())?;
        let n = a.rows();
        check_len(n, perm.len())?;
        let mut pinv = vec![NONE; n];
        for (k, &p) in perm.iter().enumerate() {
            if p >= n || pinv[p] != NONE {
                return Err(LinalgError::InvalidStructure("ordering is not a permutation"));
            }
            pinv[p] = k;
        }
        // Upper triangle of the permuted matrix, by columns.
        let mut cp = vec![0usize; n + 1];
        for i in 0..n {
            for (j, _) in a.row(i) {
                let (pi, pj) = (pinv[i], pinv[j]);
                if pi <= pj {
                    cp[pj + 1] += 1;
                }
            }
        }
        for j in 0..n {
            cp[j + 1] += cp[j];
        }
        let mut next = cp.clone();
        let mut ci = vec![0usize; cp[n]];
        let mut cx = vec![0.0; cp[n]];
        for i in 0..n {
            for (j, v) in a.row(i) {
                let (pi, pj) = (pinv[i], pinv[j]);
                if pi <= pj {
                    let q = next[pj];
                    next[pj] += 1;
                    ci[q] = pi;
                    cx[q] = v;
                }
            }
        }
        let max_diag = a.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = PIVOT_TOL * max_diag;

        let parent = etree(n, &cp, &ci);
        let mut mark = vec![NONE; n];
        let mut stack = vec![0usize; n];
        let mut counts = vec![1usize; n];
        for k in 0..n {
            let top = ereach(k, &cp, &ci, &parent, &mut mark, &mut stack);
            for &i in &stack[top..] {
                counts[i] += 1;
            }
        }
        let mut lp = vec![0usize; n + 1];
        for k in 0..n {
            lp[k + 1] = lp[k] + counts[k];
        }
        let nnz = lp[n];
        let mut li = vec![0usize; nnz];
        let mut lx = vec![0.0; nnz];
        let mut fill: Vec<usize> = lp[..n].to_vec();
        let mut x = vec![0.0; n];
        mark.fill(NONE);
        for k in 0..n {
            let top = ereach(k, &cp, &ci, &parent, &mut mark, &mut stack);
            for p in cp[k]..cp[k + 1] {
                x[ci[p]] += cx[p];
            }
            let mut d = x[k];
            x[k] = 0.0;
            for &i in &stack[top..] {
                let lki = x[i] / lx[lp[i]];
                x[i] = 0.0;
                for p in lp[i] + 1..fill[i] {
                    x[li[p]] -= lx[p] * lki;
                }
                d -= lki * lki;
                let p = fill[i];
                fill[i] += 1;
                li[p] = k;
                lx[p] = lki;
            }
            if !(d > tol) {
                return Err(LinalgError::NotPositiveDefinite { index: perm[k], value: d });
            }
            let p = fill[k];
            fill[k] += 1;
            li[p] = k;
            lx[p] = sqrt(d);
        }
        Ok(Self { n, perm, pinv, parent, lp, li, lx })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn factor_nnz(&self) -> usize {
        self.lx.len()
    }

    pub fn solve_in_place(&self, b: &mut [f64]) -> Result<()> {
        check_len(self.n, b.len())?;
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        self.lower_solve(&mut y);
        self.upper_solve(&mut y);
        for (k, &p) in self.perm.iter().enumerate() {
            b[p] = y[k];
        }
        Ok(())
    }

    fn lower_solve(&self, y: &mut [f64]) {
        for j in 0..self.n {
            let yj = y[j] / self.lx[self.lp[j]];
            y[j] = yj;
            if yj != 0.0 {
                for p in self.lp[j] + 1..self.lp[j + 1] {
                    y[self.li[p]] -= self.lx[p] * yj;
                }
            }
        }
    }

    fn upper_solve(&self, y: &mut [f64]) {
        for j in (0..self.n).rev() {
            let mut s = y[j];
            for p in self.lp[j] + 1..self.lp[j + 1] {
                s -= self.lx[p] * y[self.li[p]];
            }
            y[j] = s / self.lx[self.lp[j]];
        }
    }

    /// Dense `B^T A^{-1} B` for a sparse `B` given by columns of `(row, value)` pairs
    /// in the original (unpermuted) numbering.
    pub fn inverse_congruence(&self, columns: &[Vec<(usize, f64)>]) -> DenseMatrix {
        let m = columns.len();
        let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); self.n];
        let mut x = vec![0.0; self.n];
        let mut mark = vec![false; self.n];
        let mut reach: Vec<usize> = Vec::new();
        for (c, col) in columns.iter().enumerate() {
            reach.clear();
            for &(i, v) in col {
                let mut j = self.pinv[i];
                x[j] += v;
                while j != NONE && !mark[j] {
                    mark[j] = true;
                    reach.push(j);
                    j = self.parent[j];
                }
            }
            reach.sort_unstable();
            for &j in &reach {
                let yj = x[j] / self.lx[self.lp[j]];
                x[j] = 0.0;
                mark[j] = false;
                if yj != 0.0 {
                    for p in self.lp[j] + 1..self.lp[j + 1] {
                        x[self.li[p]] -= self.lx[p] * yj;
                    }
                    rows[j].push((c as u32, yj));
                }
            }
        }
        let mut out = DenseMatrix::zeros(m, m);
        for list in &rows {
            for (a, &(ca, va)) in list.iter().enumerate() {
                let row = out.row_mut(ca as usize);
                for &(cb, vb) in &list[a..] {
                    row[cb as usize] += va * vb;
                }
            }
        }
        for i in 0..m {
            for j in 0..i {
                out[(i, j)] = out[(j, i)];
            }
        }
        out
    }

    /// Lower factor as a dense matrix (testing aid).
    pub fn factor_matrix(&self) -> DenseMatrix {
        let mut l = DenseMatrix::zeros(self.n, self.n);
        for j in 0..self.n {
            for p in self.lp[j]..self.lp[j + 1] {
                l[(self.li[p], j)] = self.lx[p];
            }
        }
        l
    }
}

fn etree(n: usize, cp: &[usize], ci: &[usize]) -> Vec<usize> {
    let mut parent = vec![NONE; n];
    let mut ancestor = vec![NONE; n];
    for k in 0..n {
        for p in cp[k]..cp[k + 1] {
            let mut i = ci[p];
            while i != NONE && i < k {
                let inext = ancestor[i];
                ancestor[i] = k;
                if inext == NONE {
                    parent[i] = k;
                }
                i = inext;
            }
        }
    }
    parent
}

/// Nonzero pattern of row `k` of `L`, returned in `stack[top..]` in topological order.
fn ereach(
    k: usize,
    cp: &[usize],
    ci: &[usize],
    parent: &[usize],
    mark: &mut [usize],
    stack: &mut [usize],
) -> usize {
    let n = parent.len();
    let mut top = n;
    mark[k] = k;
    for p in cp[k]..cp[k + 1] {
        let mut i = ci[p];
        if i > k {
            continue;
        }
        let mut len = 0;
        while mark[i] != k {
            stack[len] = i;
            len += 1;
            mark[i] = k;
            i = parent[i];
        }
        while len > 0 {
            len -= 1;
            top -= 1;
            stack[top] = stack[len];
        }
    }
    top
}

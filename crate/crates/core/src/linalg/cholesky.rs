use alloc::vec::Vec;

use super::{check_len, DenseMatrix, LinalgError, Result, PIVOT_TOL};
use crate::math::sqrt;

/// Dense Cholesky factor `A = L L^T` (lower triangle stored row-major).
#[derive(Debug, Clone)]
pub struct DenseCholesky {
    n: usize,
    l: Vec<f64>,
}

impl DenseCholesky {
    /// Reads the lower triangle of `a`.
    pub fn factor(a: &DenseMatrix) -> Result<Self> {
        check_len(a.rows(), a.cols())?;
        let n = a.rows();
        let mut l = a.as_slice().to_vec();
        let max_diag = (0..n).fold(0.0f64, |m, i| m.max(a[(i, i)].abs()));
        let tol = PIVOT_TOL * max_diag;
        for j in 0..n {
            let (head, tail) = l.split_at_mut(j * n);
            let row_j = &mut tail[..n];
            // Row j of L from previous rows: L[j][k] = (A[j][k] - sum_{m<k} L[j][m] L[k][m]) / L[k][k]
            for k in 0..j {
                let row_k = &head[k * n..k * n + k + 1];
                let mut s = row_j[k];
                for m in 0..k {
                    s -= row_j[m] * row_k[m];
                }
                row_j[k] = s / row_k[k];
            }
            let mut d = row_j[j];
            for m in 0..j {
                d -= row_j[m] * row_j[m];
            }
            if !(d > tol) {
                return Err(LinalgError::NotPositiveDefinite { index: j, value: d });
            }
            row_j[j] = sqrt(d);
            for v in row_j[j + 1..].iter_mut() {
                *v = 0.0;
            }
        }
        Ok(Self { n, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, b: &mut [f64]) -> Result<()> {
        check_len(self.n, b.len())?;
        let n = self.n;
        for i in 0..n {
            let row = &self.l[i * n..i * n + i + 1];
            let mut s = b[i];
            for j in 0..i {
                s -= row[j] * b[j];
            }
            b[i] = s / row[i];
        }
        for i in (0..n).rev() {
            b[i] /= self.l[i * n + i];
            let xi = b[i];
            let row = &self.l[i * n..i * n + i];
            for j in 0..i {
                b[j] -= row[j] * xi;
            }
        }
        Ok(())
    }

    /// Lower factor as a dense matrix.
    pub fn factor_matrix(&self) -> DenseMatrix {
        DenseMatrix::from_vec(self.n, self.n, self.l.clone()).expect("finite factor")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_hand_system() {
        let a = DenseMatrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let c = DenseCholesky::factor(&a).unwrap();
        let mut b = [3.0, 3.0];
        c.solve_in_place(&mut b).unwrap();
        assert!((b[0] - 1.0).abs() < 1e-15 && (b[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_indefinite() {
        let a = DenseMatrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
        assert!(matches!(DenseCholesky::factor(&a), Err(LinalgError::NotPositiveDefinite { index: 1, .. })));
    }
}

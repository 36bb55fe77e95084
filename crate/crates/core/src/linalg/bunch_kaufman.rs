use alloc::vec;
use alloc::vec::Vec;

use super::{check_len, DenseMatrix, Inertia, LinalgError, Result, PIVOT_TOL};
use crate::math::sqrt;

/// Dense symmetric indefinite factorization `P A P^T = L D L^T` with
/// Bunch–Kaufman partial pivoting; `D` has 1x1 and 2x2 blocks.
#[derive(Debug, Clone)]
pub struct BunchKaufman {
    n: usize,
    /// Strictly lower unit factor, row-major n x n.
    l: Vec<f64>,
    d_diag: Vec<f64>,
    /// Off-diagonal of a 2x2 block, stored at the block's first index.
    d_off: Vec<f64>,
    block2: Vec<bool>,
    perm: Vec<usize>,
    inertia: Inertia,
}

impl BunchKaufman {
    /// Reads the lower triangle of `a`.
    pub fn factor(a: &DenseMatrix) -> Result<Self> {
        check_len(a.rows(), a.cols())?;
        let n = a.rows();
        let mut w = a.as_slice().to_vec();
        let mut scale = 0.0f64;
        for i in 0..n {
            scale = scale.max(w[i * n + i].abs());
        }
        if scale == 0.0 {
            for i in 0..n {
                for j in 0..i {
                    scale = scale.max(w[i * n + j].abs());
                }
            }
        }
        let tol = PIVOT_TOL * scale;
        let alpha = (1.0 + sqrt(17.0)) / 8.0;
        let mut perm: Vec<usize> = (0..n).collect();
        let mut d_diag = vec![0.0; n];
        let mut d_off = vec![0.0; n];
        let mut block2 = vec![false; n];
        let mut inertia = Inertia::default();
        let mut col = vec![0.0; n];
        let mut col2 = vec![0.0; n];

        let at = |w: &[f64], i: usize, j: usize| if i >= j { w[i * n + j] } else { w[j * n + i] };

        let mut k = 0;
        while k < n {
            let absakk = w[k * n + k].abs();
            let mut imax = k;
            let mut colmax = 0.0;
            for i in k + 1..n {
                let v = w[i * n + k].abs();
                if v > colmax {
                    colmax = v;
                    imax = i;
                }
            }
            if absakk.max(colmax) <= tol {
                return Err(LinalgError::SingularMatrix { index: k });
            }
            let (kp, kstep) = if absakk >= alpha * colmax {
                (k, 1)
            } else {
                let mut rowmax = 0.0f64;
                for j in k..n {
                    if j != imax {
                        rowmax = rowmax.max(at(&w, imax, j).abs());
                    }
                }
                if absakk * rowmax >= alpha * colmax * colmax {
                    (k, 1)
                } else if w[imax * n + imax].abs() >= alpha * rowmax {
                    (imax, 1)
                } else {
                    (imax, 2)
                }
            };
            let kk = k + kstep - 1;
            if kp != kk {
                swap_symmetric(&mut w, n, kk, kp);
                perm.swap(kk, kp);
            }
            if kstep == 1 {
                let d = w[k * n + k];
                if d.abs() <= tol {
                    return Err(LinalgError::SingularMatrix { index: k });
                }
                d_diag[k] = d;
                if d > 0.0 {
                    inertia.positive += 1;
                } else {
                    inertia.negative += 1;
                }
                for i in k + 1..n {
                    col[i] = w[i * n + k];
                }
                for i in k + 1..n {
                    let li = col[i] / d;
                    if li != 0.0 {
                        let row = &mut w[i * n + k + 1..i * n + i + 1];
                        for (r, c) in row.iter_mut().zip(&col[k + 1..=i]) {
                            *r -= li * c;
                        }
                    }
                    w[i * n + k] = li;
                }
            } else {
                let d11 = w[k * n + k];
                let d21 = w[(k + 1) * n + k];
                let d22 = w[(k + 1) * n + k + 1];
                let det = d11 * d22 - d21 * d21;
                if det.abs() <= tol * scale {
                    return Err(LinalgError::SingularMatrix { index: k });
                }
                d_diag[k] = d11;
                d_diag[k + 1] = d22;
                d_off[k] = d21;
                block2[k] = true;
                if det < 0.0 {
                    inertia.positive += 1;
                    inertia.negative += 1;
                } else if d11 + d22 > 0.0 {
                    inertia.positive += 2;
                } else {
                    inertia.negative += 2;
                }
                w[(k + 1) * n + k] = 0.0;
                for i in k + 2..n {
                    col[i] = w[i * n + k];
                    col2[i] = w[i * n + k + 1];
                }
                for i in k + 2..n {
                    let c1 = col[i];
                    let c2 = col2[i];
                    let l1 = (c1 * d22 - c2 * d21) / det;
                    let l2 = (c2 * d11 - c1 * d21) / det;
                    if l1 != 0.0 || l2 != 0.0 {
                        let row = &mut w[i * n + k + 2..i * n + i + 1];
                        for ((r, a), b) in row.iter_mut().zip(&col[k + 2..=i]).zip(&col2[k + 2..=i]) {
                            *r -= l1 * a + l2 * b;
                        }
                    }
                    w[i * n + k] = l1;
                    w[i * n + k + 1] = l2;
                }
            }
            k += kstep;
        }
        for i in 0..n {
            for j in i..n {
                w[i * n + j] = 0.0;
            }
        }
        Ok(Self { n, l: w, d_diag, d_off, block2, perm, inertia })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn inertia(&self) -> Inertia {
        self.inertia
    }

    /// `perm[new] = old`.
    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn solve_in_place(&self, b: &mut [f64]) -> Result<()> {
        check_len(self.n, b.len())?;
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.l[i * n..i * n + i];
            y[i] -= super::dot(row, &y[..i]);
        }
        let mut k = 0;
        while k < n {
            if self.block2[k] {
                let (a, c, d) = (self.d_diag[k], self.d_off[k], self.d_diag[k + 1]);
                let det = a * d - c * c;
                let (u, v) = (y[k], y[k + 1]);
                y[k] = (d * u - c * v) / det;
                y[k + 1] = (a * v - c * u) / det;
                k += 2;
            } else {
                y[k] /= self.d_diag[k];
                k += 1;
            }
        }
        for i in (0..n).rev() {
            let xi = y[i];
            if xi != 0.0 {
                let row = &self.l[i * n..i * n + i];
                for (yj, lij) in y[..i].iter_mut().zip(row) {
                    *yj -= lij * xi;
                }
            }
        }
        for (k, &p) in self.perm.iter().enumerate() {
            b[p] = y[k];
        }
        Ok(())
    }

    /// Unit lower factor `L` and block diagonal `D` as dense matrices.
    pub fn factors(&self) -> (DenseMatrix, DenseMatrix) {
        let n = self.n;
        let mut l = DenseMatrix::from_vec(n, n, self.l.clone()).expect("finite factor");
        let mut d = DenseMatrix::zeros(n, n);
        for i in 0..n {
            l[(i, i)] = 1.0;
            d[(i, i)] = self.d_diag[i];
            if self.block2[i] {
                d[(i + 1, i)] = self.d_off[i];
                d[(i, i + 1)] = self.d_off[i];
            }
        }
        (l, d)
    }
}

/// Swaps rows/columns `r < s` of a symmetric matrix stored in its lower triangle,
/// including the already computed factor columns.
fn swap_symmetric(w: &mut [f64], n: usize, r: usize, s: usize) {
    debug_assert!(r < s);
    for j in 0..r {
        w.swap(r * n + j, s * n + j);
    }
    w.swap(r * n + r, s * n + s);
    for j in r + 1..s {
        w.swap(j * n + r, s * n + j);
    }
    for i in s + 1..n {
        w.swap(i * n + r, i * n + s);
    }
}

use ietidp_core::linalg::{
    factor_spd, factor_symmetric_indefinite, BunchKaufman, DenseMatrix, SparseMatrix, TripletBuilder,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn to_nalgebra(m: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

/// Random banded SPD matrix: `G^T G + I` with `G` banded.
fn banded_spd(n: usize, band: usize, vals: &[f64]) -> SparseMatrix {
    let g = DMatrix::from_fn(n, n, |i, j| if i.abs_diff(j) <= band { vals[(i * 31 + j * 7) % vals.len()] } else { 0.0 });
    let a = g.transpose() * &g + DMatrix::identity(n, n);
    let mut b = TripletBuilder::new(n, n);
    for i in 0..n {
        for j in 0..n {
            if a[(i, j)] != 0.0 {
                b.push(i, j, a[(i, j)]).unwrap();
            }
        }
    }
    b.build()
}

proptest! {
    #[test]
    fn spmv_matches_dense(n in 1usize..30, m in 1usize..30, entries in prop::collection::vec((0usize..900, -1.0f64..1.0), 0..80), x in prop::collection::vec(-1.0f64..1.0, 30)) {
        let triplets: Vec<(usize, usize, f64)> = entries.iter().map(|&(k, v)| (k % n, (k / n) % m, v)).collect();
        let s = SparseMatrix::from_triplets(n, m, &triplets).unwrap();
        let d = to_nalgebra(&s.to_dense());
        let y = s.spmv(&x[..m]).unwrap();
        let want = &d * nalgebra::DVector::from_column_slice(&x[..m]);
        for i in 0..n {
            prop_assert!((y[i] - want[i]).abs() < 1e-12);
        }
        let mut yt = vec![0.0; m];
        s.spmv_transpose_add(&x[..n], &mut yt).unwrap();
        let want_t = d.transpose() * nalgebra::DVector::from_column_slice(&x[..n]);
        for j in 0..m {
            prop_assert!((yt[j] - want_t[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn spd_solve_matches_dense_oracle(n in 1usize..60, band in 0usize..4, vals in prop::collection::vec(-1.0f64..1.0, 1..40), b in prop::collection::vec(-1.0f64..1.0, 60)) {
        let a = banded_spd(n, band, &vals);
        let f = factor_spd(&a).unwrap();
        let x = f.solve(&b[..n]).unwrap();
        let want = to_nalgebra(&a.to_dense()).cholesky().unwrap().solve(&nalgebra::DVector::from_column_slice(&b[..n]));
        let scale = want.amax().max(1.0);
        for i in 0..n {
            prop_assert!((x[i] - want[i]).abs() <= 1e-10 * scale);
        }
        let inertia = f.inertia();
        prop_assert_eq!(inertia.positive, n);
    }

    /// `[[A, B^T], [B, 0]]` with `A` SPD and `B` of full row rank has inertia `(n, m, 0)`.
    #[test]
    fn saddle_inertia(n in 2usize..20, m_frac in 0.0f64..1.0, vals in prop::collection::vec(-1.0f64..1.0, 1..40), rhs in prop::collection::vec(-1.0f64..1.0, 40)) {
        let m = ((n as f64 * m_frac) as usize).min(n - 1);
        let a = banded_spd(n, 2, &vals).to_dense();
        let dim = n + m;
        let mut k = DenseMatrix::zeros(dim, dim);
        for i in 0..n {
            for j in 0..n {
                k[(i, j)] = a[(i, j)];
            }
        }
        // Rows of B: e_i + 0.5 e_{i+1}, full rank for i < n - 1.
        for r in 0..m {
            for (c, v) in [(r, 1.0), (r + 1, 0.5)] {
                k[(n + r, c)] = v;
                k[(c, n + r)] = v;
            }
        }
        let bk = BunchKaufman::factor(&k).unwrap();
        let inertia = bk.inertia();
        prop_assert_eq!((inertia.positive, inertia.negative, inertia.zero), (n, m, 0));
        let eig = to_nalgebra(&k).symmetric_eigen();
        prop_assert_eq!(eig.eigenvalues.iter().filter(|&&e| e < 0.0).count(), m);
        let mut x = rhs[..dim].to_vec();
        bk.solve_in_place(&mut x).unwrap();
        let r = k.matvec(&x).unwrap();
        for i in 0..dim {
            prop_assert!((r[i] - rhs[i]).abs() < 1e-9);
        }
        let sparse = SparseMatrix::from_dense(&k, 0.0);
        let f = factor_symmetric_indefinite(&sparse).unwrap();
        prop_assert_eq!(f.inertia().negative, m);
    }
}

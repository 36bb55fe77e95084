mod support;

use ietidp_core::ieti::IetiOperator;
use ietidp_core::krylov::pcg;
use ietidp_core::linalg::dot;
use ietidp_core::precond::{
    apply_scaled_dirichlet, jump_check, selection_jump, DeluxeEdgeBlocks, Preconditioner, PreconditionerKind,
    SelectionScaling,
};
use nalgebra::DMatrix;
use rand::Rng;
use support::*;

fn dual_matrix(op: &IetiOperator, k: usize) -> DMatrix<f64> {
    let mut b = DMatrix::zeros(op.num_multipliers(), op.schur(k).n_skeleton());
    for &(m, g, v) in op.dual_entries(k) {
        b[(m, g)] += v;
    }
    b
}

fn schur_dense(op: &IetiOperator, k: usize) -> DMatrix<f64> {
    let s = op.schur(k).matrix();
    DMatrix::from_fn(s.rows(), s.cols(), |i, j| s[(i, j)])
}

fn columns(n: usize, mut apply: impl FnMut(&[f64]) -> Vec<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e.fill(0.0);
        e[j] = 1.0;
        let c = apply(&e);
        for i in 0..n {
            m[(i, j)] = c[i];
        }
    }
    m
}

#[test]
fn jump_image_trace_equals_the_jump() {
    let mut rng = rng(21);
    for fx in all_fixtures() {
        let (c, op) = fx.operator(&load);
        for _ in 0..20 {
            let w = random_vertex_continuous(&op, &mut rng, true);
            for j in jump_check(&op, &fx.topology, &c, &w, 50) {
                for i in 0..j.params.len() {
                    assert!((j.image_fine[i] - j.jump[i]).abs() < 1e-9, "{} coupling {}", fx.name, j.coupling);
                    assert!(j.image_coarse[i].abs() < 1e-9, "{} coupling {}", fx.name, j.coupling);
                }
            }
        }
    }
}

#[test]
fn continuous_input_has_no_jump() {
    for fx in [two_nested(2), three_t_junction(2), four_cross(3)] {
        let (c, op) = fx.operator(&load);
        let scaling = SelectionScaling::new(&op);
        // The conforming Galerkin solution is continuous across all interfaces.
        let u = monolithic(&fx.topology, &c, &load);
        let w: Vec<Vec<f64>> = u.iter().enumerate().map(|(k, uk)| uk[op.schur(k).n_interior()..].to_vec()).collect();
        let scale = w.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs()));
        for v in selection_jump(&op, &scaling, &w) {
            assert!(v.iter().all(|x| x.abs() < 1e-10 * scale), "{}", fx.name);
        }
    }
}

#[test]
fn jump_image_in_dual_space_and_b_invariant() {
    let mut rng = rng(5);
    for fx in all_fixtures() {
        let (_, op) = fx.operator(&load);
        let scaling = SelectionScaling::new(&op);
        for with_vertices in [true, false] {
            for _ in 0..20 {
                let w = random_vertex_continuous(&op, &mut rng, with_vertices);
                let v = selection_jump(&op, &scaling, &w);
                for (k, vk) in v.iter().enumerate() {
                    for x in vertex_values(&op, k, vk) {
                        assert!(x.abs() < 1e-10, "{}: vertex value {x:e}", fx.name);
                    }
                }
                if !with_vertices {
                    let mut bw = vec![0.0; op.num_multipliers()];
                    let mut bv = vec![0.0; op.num_multipliers()];
                    for k in 0..op.num_patches() {
                        op.dual_apply_add(k, &w[k], &mut bw);
                        op.dual_apply_add(k, &v[k], &mut bv);
                    }
                    for (a, b) in bw.iter().zip(&bv) {
                        assert!((a - b).abs() < 1e-10, "{}", fx.name);
                    }
                }
            }
        }
    }
}

#[test]
fn scaled_dirichlet_matches_dense_oracle() {
    let fx = two_nested(1);
    let (_, op) = fx.operator(&load);
    let scaling = SelectionScaling::new(&op);
    let n = op.num_multipliers();
    let mut oracle = DMatrix::zeros(n, n);
    for k in 0..op.num_patches() {
        let b = dual_matrix(&op, k);
        let d = DMatrix::from_fn(b.ncols(), b.ncols(), |i, j| if i == j && scaling.diagonal(k)[i] { 1.0 } else { 0.0 });
        oracle += &b * &d * schur_dense(&op, k) * &d * b.transpose();
    }
    let m = columns(n, |e| apply_scaled_dirichlet(&op, &scaling, e));
    assert!((m - &oracle).amax() <= 1e-12 * oracle.amax());
}

/// Edge blocks rebuilt from the dense Schur complements: fine rows of each
/// interface, coarse open-edge functions, prolongation from the constraint rows.
#[test]
fn deluxe_matches_dense_oracle() {
    for fx in [two_nested(1), three_t_junction(2)] {
        let (c, op) = fx.operator(&load);
        let cons = op.constraints();
        let n = op.num_multipliers();
        let mut oracle = DMatrix::zeros(n, n);
        for (ci, cp) in c.iter().enumerate() {
            let mults: Vec<usize> = (0..n).filter(|&m| cons.rows[cons.dual_rows[m]].coupling == ci).collect();
            if mults.is_empty() {
                continue;
            }
            let (kf, kc) = (cp.fine.patch, cp.coarse.patch);
            let (nif, nic) = (op.schur(kf).n_interior(), op.schur(kc).n_interior());
            let lc = &op.layouts()[kc];
            let trace = lc.edge_trace(cp.coarse.side);
            let open: Vec<usize> = trace[1..trace.len() - 1].iter().filter_map(|&l| lc.local(l)).map(|d| d - nic).collect();
            let fine: Vec<usize> = mults.iter().map(|&m| cons.rows[cons.dual_rows[m]].fine_dof() - nif).collect();
            let coarse: Vec<usize> = open
                .iter()
                .copied()
                .filter(|&g| mults.iter().any(|&m| cons.rows[cons.dual_rows[m]].entries[1..].iter().any(|e| e.1 == g + nic)))
                .collect();
            let sf = schur_dense(&op, kf).select_rows(&fine).select_columns(&fine);
            let block = if coarse.is_empty() {
                sf
            } else {
                let sc = schur_dense(&op, kc).select_rows(&coarse).select_columns(&coarse);
                let p = DMatrix::from_fn(fine.len(), coarse.len(), |a, b| {
                    cons.rows[cons.dual_rows[mults[a]]].entries[1..]
                        .iter()
                        .find(|e| e.1 == coarse[b] + nic)
                        .map_or(0.0, |e| -e.2)
                });
                (sf.try_inverse().unwrap() + &p * sc.try_inverse().unwrap() * p.transpose()).try_inverse().unwrap()
            };
            for (a, &ma) in mults.iter().enumerate() {
                for (b, &mb) in mults.iter().enumerate() {
                    oracle[(ma, mb)] += block[(a, b)];
                }
            }
        }
        let blocks = DeluxeEdgeBlocks::new(&op, &c).unwrap();
        let m = columns(n, |e| blocks.apply(e));
        assert!((m - &oracle).amax() <= 1e-9 * oracle.amax(), "{}", fx.name);
    }
}

#[test]
fn preconditioners_symmetric_semidefinite() {
    let mut rng = rng(9);
    for fx in all_fixtures() {
        let (c, op) = fx.operator(&load);
        let n = op.num_multipliers();
        for kind in [PreconditionerKind::Selection, PreconditionerKind::Deluxe] {
            let m = Preconditioner::build(kind, &op, &c).unwrap();
            assert!(m.apply(&op, &vec![0.0; n]).iter().all(|&v| v == 0.0));
            for _ in 0..10 {
                let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let (mx, my) = (m.apply(&op, &x), m.apply(&op, &y));
                let (a, b) = (dot(&y, &mx), dot(&x, &my));
                assert!((a - b).abs() <= 1e-10 * a.abs().max(b.abs()), "{} {kind:?}", fx.name);
                assert!(dot(&x, &mx) >= -1e-12 * dot(&x, &x), "{} {kind:?}", fx.name);
            }
        }
    }
}

#[test]
fn matching_square_iteration_counts_agree() {
    let patches = vec![
        rect([0.0, 0.0], [1.0, 1.0], 2, 4, 4, 1.0),
        rect([1.0, 0.0], [2.0, 1.0], 2, 4, 4, 1.0),
        rect([0.0, 1.0], [1.0, 2.0], 2, 4, 4, 1.0),
        rect([1.0, 1.0], [2.0, 2.0], 2, 4, 4, 1.0),
    ];
    let topo = ietidp_core::geometry::build_topology(patches, 1e-9).unwrap();
    let c = ietidp_core::coupling::order_interfaces(&topo).unwrap();
    let op = IetiOperator::new(&topo, &c, &load).unwrap();
    let mut its = Vec::new();
    for kind in [PreconditionerKind::Selection, PreconditionerKind::Deluxe] {
        let m = Preconditioner::build(kind, &op, &c).unwrap();
        let (_, r) = pcg(|x| op.apply_f(x).unwrap(), |x| m.apply(&op, x), &op.rhs(), 1e-6, 500).unwrap();
        its.push(r.iterations);
    }
    assert!(its[0].abs_diff(its[1]) <= 3, "{its:?}");
}

mod support;

use ietidp_core::adaptivity::eval_physical;
use ietidp_core::assembly::{assemble_local, DofLayout};
use ietidp_core::coupling::{check_one_positive, check_selection};
use ietidp_core::geometry::{det, Side, VertexIncidence};
use ietidp_core::ieti::{IetiOperator, SkeletonSchur};
use ietidp_core::krylov::pcg;
use ietidp_core::linalg::dot;
use ietidp_core::precond::{Preconditioner, PreconditionerKind};
use ietidp_core::quadrature::gauss_legendre;
use nalgebra::DMatrix;
use rand::Rng;
use support::*;

fn solve(op: &IetiOperator, kind: PreconditionerKind, couplings: &[ietidp_core::coupling::InterfaceCoupling]) -> Vec<Vec<f64>> {
    let m = Preconditioner::build(kind, op, couplings).unwrap();
    let (lambda, _) = pcg(|x| op.apply_f(x).unwrap(), |r| m.apply(op, r), &op.rhs(), 1e-10, 2000).unwrap();
    op.reconstruct(&lambda).unwrap()
}

#[test]
fn matches_monolithic_oracle() {
    for fx in all_fixtures() {
        let (c, op) = fx.operator(&load);
        let oracle = monolithic(&fx.topology, &c, &load);
        for kind in [PreconditionerKind::Selection, PreconditionerKind::Deluxe] {
            let u = solve(&op, kind, &c);
            let err = relative_error(&u, &oracle);
            assert!(err <= 1e-7, "{} {kind:?}: {err:e}", fx.name);
        }
    }
}

#[test]
fn constraint_structure() {
    for fx in all_fixtures() {
        let (_, op) = fx.operator(&load);
        assert!(check_one_positive(op.constraints()), "{}", fx.name);
        assert!(check_selection(op.constraints()), "{}", fx.name);
    }
}

#[test]
fn primal_basis_interpolates_and_is_energy_orthogonal() {
    let mut rng = rng(7);
    for fx in all_fixtures() {
        let (_, op) = fx.operator(&load);
        let basis = op.primal_basis();
        for k in 0..op.num_patches() {
            let psi = &basis.psi[k];
            for j in 0..psi.cols() {
                let vals = vertex_values(&op, k, &psi.column(j));
                for (i, v) in vals.iter().enumerate() {
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((v - e).abs() < 1e-10, "{} patch {k}: C Psi[{i},{j}] = {v}", fx.name);
                }
            }
            let s = op.schur(k).matrix();
            let spsi = s.matmul(psi).unwrap();
            let ng = psi.rows();
            for _ in 0..20 {
                let mut v: Vec<f64> = (0..ng).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let cv = vertex_values(&op, k, &v);
                for (j, c) in cv.iter().enumerate() {
                    for g in 0..ng {
                        v[g] -= psi[(g, j)] * c;
                    }
                }
                for j in 0..psi.cols() {
                    let col = spsi.column(j);
                    let a = dot(&v, &col);
                    let scale = dot(&v, &s.matvec(&v).unwrap()).sqrt() * dot(&psi.column(j), &col).sqrt();
                    assert!(a.abs() <= 1e-9 * scale.max(1e-300), "{} patch {k}: {a:e}", fx.name);
                }
            }
        }
    }
}

#[test]
fn dual_operator_is_symmetric_positive() {
    let mut rng = rng(11);
    for fx in all_fixtures() {
        let (_, op) = fx.operator(&load);
        let n = op.num_multipliers();
        for _ in 0..5 {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let fx_ = op.apply_f(&x).unwrap();
            let fy = op.apply_f(&y).unwrap();
            let (a, b) = (dot(&y, &fx_), dot(&x, &fy));
            assert!((a - b).abs() <= 1e-10 * a.abs().max(b.abs()), "{}: {a} vs {b}", fx.name);
            assert!(dot(&x, &fx_) > 0.0, "{}", fx.name);
        }
    }
}

/// `sum w^T S w` equals `sum nu |H w|_1^2` computed by quadrature. The rule
/// matches the assembly rule so curved patches agree to roundoff.
#[test]
fn energy_of_harmonic_extension() {
    let mut rng = rng(3);
    for fx in [two_nested(2), three_t_junction(3), checkerboard_fixture(2)] {
        let (_, op) = fx.operator(&load);
        for k in 0..op.num_patches() {
            let ng = op.schur(k).n_skeleton();
            let w: Vec<f64> = (0..ng).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let sw = dot(&w, &op.skeleton_schur_apply(k, &w));
            let patch = &fx.topology.patches[k];
            let tensor = op.layouts()[k].to_tensor(&op.harmonic_extend(k, &w));
            let nq = patch.degree() + 1;
            let (x, wq) = gauss_legendre(nq);
            let mut energy = 0.0;
            for e2 in patch.knots[1].breakpoints().windows(2) {
                for e1 in patch.knots[0].breakpoints().windows(2) {
                    for (q2, w2) in wq.iter().enumerate() {
                        for (q1, w1) in wq.iter().enumerate() {
                            let xi = [e1[0] + (e1[1] - e1[0]) * x[q1], e2[0] + (e2[1] - e2[0]) * x[q2]];
                            let (_, g, _) = eval_physical(patch, &tensor, xi).unwrap();
                            let j = patch.geometry.jacobian(xi).unwrap();
                            let wt = w1 * w2 * (e1[1] - e1[0]) * (e2[1] - e2[0]) * det(&j).abs();
                            energy += patch.nu * (g[0] * g[0] + g[1] * g[1]) * wt;
                        }
                    }
                }
            }
            assert!((sw - energy).abs() <= 1e-9 * energy, "{} patch {k}: {sw} vs {energy}", fx.name);
        }
    }
}

#[test]
fn one_primal_per_free_vertex() {
    let sides = [Side::South, Side::East, Side::North, Side::West];
    for p in [1, 2, 3] {
        for fx in [two_nested(p), three_t_junction(p), four_cross(p)] {
            let (_, op) = fx.operator(&load);
            let topo = &fx.topology;
            let free = topo
                .vertices
                .iter()
                .filter(|v| {
                    !v.incidences.iter().any(|inc| match *inc {
                        VertexIncidence::Corner { patch, corner } => sides
                            .iter()
                            .any(|s| topo.dirichlet[patch][s.index()] && s.corners().contains(&corner)),
                        VertexIncidence::EdgeInterior { patch, side, .. } => topo.dirichlet[patch][side.index()],
                    })
                })
                .count();
            assert_eq!(op.num_primal(), free, "{} p={p}", fx.name);
        }
    }
}

/// Skeleton Schur complement of a `p = 1`, 2x2 element unit square against
/// explicit elimination of its single interior function.
#[test]
fn schur_matches_dense_elimination() {
    let patch = rect([0.0, 0.0], [1.0, 1.0], 1, 2, 2, 1.0);
    let layout = DofLayout::new([3, 3], [false; 4]);
    let sys = assemble_local(&patch, &layout, |_| 0.0).unwrap();
    assert_eq!(sys.n_interior, 1);
    let s = SkeletonSchur::new(&sys, &layout, 1).unwrap();
    let a = DMatrix::from_fn(9, 9, |i, j| sys.matrix.get(i, j));
    let agg = a.view((1, 1), (8, 8));
    let agi = a.view((1, 0), (8, 1));
    let oracle = agg - agi * agi.transpose() / a[(0, 0)];
    for i in 0..8 {
        for j in 0..8 {
            assert!((s.matrix()[(i, j)] - oracle[(i, j)]).abs() < 1e-12);
        }
    }
}

/// Manufactured solution `u = sin(pi x) sin(pi y / 2)` on the T-junction
/// fixture over `[0, 2]^2`: the discrete error drops at the optimal rate under refinement.
#[test]
fn manufactured_solution_converges() {
    use core::f64::consts::PI;
    let exact = |x: [f64; 2]| (PI * x[0]).sin() * (PI * x[1] / 2.0).sin();
    let f = |x: [f64; 2]| 1.25 * PI * PI * exact(x);
    let mut errs = Vec::new();
    for r in [1usize, 2, 3] {
        let m = 1 << r;
        let patches = vec![
            rect([0.0, 0.0], [1.0, 2.0], 2, m, 2 * m, 1.0),
            rect([1.0, 0.0], [2.0, 1.0], 2, 2 * m, 2 * m, 1.0),
            rect([1.0, 1.0], [2.0, 2.0], 2, 2 * m, 2 * m, 1.0),
        ];
        let topo = ietidp_core::geometry::build_topology(patches, 1e-9).unwrap();
        let c = ietidp_core::coupling::order_interfaces(&topo).unwrap();
        let op = IetiOperator::new(&topo, &c, &f).unwrap();
        let u = solve(&op, PreconditionerKind::Selection, &c);
        let (x, w) = gauss_legendre(4);
        let mut e2 = 0.0;
        for (k, patch) in topo.patches.iter().enumerate() {
            let tensor = op.layouts()[k].to_tensor(&u[k]);
            for b2 in patch.knots[1].breakpoints().windows(2) {
                for b1 in patch.knots[0].breakpoints().windows(2) {
                    for q2 in 0..4 {
                        for q1 in 0..4 {
                            let xi = [b1[0] + (b1[1] - b1[0]) * x[q1], b2[0] + (b2[1] - b2[0]) * x[q2]];
                            let (uh, _, _) = eval_physical(patch, &tensor, xi).unwrap();
                            let j = patch.geometry.jacobian(xi).unwrap();
                            let pt = patch.geometry.eval(xi).unwrap();
                            let d = uh - exact(pt);
                            e2 += d * d * w[q1] * w[q2] * (b1[1] - b1[0]) * (b2[1] - b2[0]) * det(&j).abs();
                        }
                    }
                }
            }
        }
        errs.push(e2.sqrt());
    }
    for pair in errs.windows(2) {
        let rate = (pair[0] / pair[1]).log2();
        assert!(rate > 2.7, "L2 rate {rate} from {errs:?}");
    }
}

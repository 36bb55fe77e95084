mod support;

use std::collections::BTreeSet;

use ietidp_core::adaptivity::{consistency_split, doerfler_mark, estimate, split_patch, split_patches};
use ietidp_core::coupling::check_consistency;
use ietidp_core::geometry::GeometryMap;
use ietidp_core::scenarios::{
    checkerboard, corner_annulus, solve_patches, Annulus, CoefficientPattern, SolverOptions,
};
use proptest::prelude::*;
use support::*;

/// `u = x (2 - x) y (1 - y)` is biquadratic, so the `p = 2` Galerkin solution
/// reproduces it and both residual terms vanish.
#[test]
fn estimator_vanishes_on_representable_solution() {
    let f = |x: [f64; 2]| 2.0 * x[1] * (1.0 - x[1]) + 2.0 * x[0] * (2.0 - x[0]);
    let patches = vec![rect([0.0, 0.0], [1.0, 1.0], 2, 2, 2, 1.0), rect([1.0, 0.0], [2.0, 1.0], 2, 4, 4, 1.0)];
    let opts = SolverOptions { tol: 1e-12, ..SolverOptions::default() };
    let s = solve_patches(patches, &f, &opts).unwrap();
    let est = estimate(&s.topology, &s.couplings, s.operator.layouts(), &s.solution, &f).unwrap();
    assert!(est.eta() < 1e-8, "eta = {:e}", est.eta());
}

#[test]
fn estimator_is_nonnegative_and_additive() {
    let f = |_: [f64; 2]| 1.0;
    let s = solve_patches(corner_annulus(2, 1000.0, Annulus::default()).unwrap(), &f, &SolverOptions::default()).unwrap();
    let est = estimate(&s.topology, &s.couplings, s.operator.layouts(), &s.solution, &f).unwrap();
    assert!(est.per_patch.iter().all(|&e| e >= 0.0));
    assert!((est.per_patch.iter().sum::<f64>() - est.total).abs() <= 1e-14 * est.total);
    assert!(est.total > 0.0);
}

#[test]
fn consistency_split_repairs_bad_pattern() {
    let patches = checkerboard(2, 0, 1, CoefficientPattern::Bad, 1000.0, Annulus::default()).unwrap();
    let cfg = consistency_split(patches, true).unwrap();
    assert!(cfg.extra_patches > 0);
    assert!(check_consistency(&cfg.topology, &cfg.couplings).is_empty());
    let good = checkerboard(2, 0, 1, CoefficientPattern::Good, 1000.0, Annulus::default()).unwrap();
    assert_eq!(consistency_split(good, true).unwrap().extra_patches, 0);
}

#[test]
fn split_patches_keeps_order_of_untouched() {
    let patches = corner_annulus(2, 1.0, Annulus::default()).unwrap();
    let out = split_patches(&patches, &BTreeSet::from([1])).unwrap();
    assert_eq!(out.len(), 7);
    assert_eq!(out[0], patches[0]);
    assert_eq!(out[5], patches[2]);
    assert_eq!(out[6], patches[3]);
}

proptest! {
    #[test]
    fn doerfler_set_is_minimal(eta in prop::collection::vec(0.0f64..10.0, 1..30), theta in 0.05f64..0.95) {
        prop_assume!(eta.iter().sum::<f64>() > 0.0);
        let total: f64 = eta.iter().sum();
        let marked = doerfler_mark(&eta, theta).unwrap();
        let sum: f64 = marked.iter().map(|&k| eta[k]).sum();
        prop_assert!(sum > theta * total);
        prop_assert!(marked.windows(2).all(|w| w[0] < w[1]));
        let smallest = marked.iter().map(|&k| eta[k]).fold(f64::INFINITY, f64::min);
        prop_assert!(sum - smallest <= theta * total);
    }

    /// Children tile the parent: every parent parameter point lies in exactly one
    /// child (up to shared boundaries) and the child maps agree with the parent.
    #[test]
    fn children_tile_parent(x in 0.0f64..1.0, y in 0.0f64..1.0, t0 in 0.0f64..1.0, dt in 0.2f64..1.0) {
        let g = GeometryMap::AnnulusSector { center: [0.0, 0.0], r_inner: 1.0, r_outer: 2.0, theta0: t0, theta1: t0 + dt };
        let kv = ietidp_core::splines::KnotVector::uniform(2, 3);
        let parent = ietidp_core::geometry::Patch::new(g, [kv.clone(), kv], 1.0).unwrap();
        let children = split_patch(&parent).unwrap();
        let (a, b) = (usize::from(x >= 0.5), usize::from(y >= 0.5));
        let child = &children[a + 2 * b];
        let local = [2.0 * x - a as f64, 2.0 * y - b as f64];
        let p = parent.geometry.eval([x, y]).unwrap();
        let q = child.geometry.eval(local).unwrap();
        prop_assert!((p[0] - q[0]).abs() < 1e-12 && (p[1] - q[1]).abs() < 1e-12);
        prop_assert_eq!(child.knots[0].num_elements(), 3);
    }
}

//! Fixture geometries and dense oracles shared by the integration tests.
#![allow(dead_code)]

use ietidp_core::assembly::DofLayout;
use ietidp_core::coupling::{build_constraints, order_interfaces, InterfaceCoupling};
use ietidp_core::geometry::{build_topology, GeometryMap, MultiPatchTopology, Patch, Point, DEFAULT_TOPOLOGY_TOL};
use ietidp_core::ieti::{assemble_patches, IetiOperator};
use ietidp_core::scenarios::{checkerboard, run_adaptive, AdaptiveOptions, Annulus, CoefficientPattern};
use ietidp_core::splines::KnotVector;
use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn rect(lo: Point, hi: Point, p: usize, e1: usize, e2: usize, nu: f64) -> Patch {
    Patch::new(GeometryMap::rectangle(lo, hi), [KnotVector::uniform(p, e1), KnotVector::uniform(p, e2)], nu).unwrap()
}

/// A named fixture geometry.
pub struct Fixture {
    pub name: &'static str,
    pub topology: MultiPatchTopology,
}

impl Fixture {
    fn new(name: &'static str, patches: Vec<Patch>) -> Self {
        Self { name, topology: build_topology(patches, DEFAULT_TOPOLOGY_TOL).unwrap() }
    }

    pub fn couplings(&self) -> Vec<InterfaceCoupling> {
        order_interfaces(&self.topology).unwrap()
    }

    pub fn operator(&self, f: &dyn Fn(Point) -> f64) -> (Vec<InterfaceCoupling>, IetiOperator) {
        let c = self.couplings();
        let op = IetiOperator::new(&self.topology, &c, f).unwrap();
        (c, op)
    }
}

pub fn two_matching(p: usize) -> Fixture {
    Fixture::new(
        "two_matching",
        vec![rect([0.0, 0.0], [1.0, 1.0], p, 3, 3, 1.0), rect([1.0, 0.0], [2.0, 1.0], p, 3, 3, 10.0)],
    )
}

pub fn two_nested(p: usize) -> Fixture {
    Fixture::new(
        "two_nested",
        vec![rect([0.0, 0.0], [1.0, 1.0], p, 2, 2, 3.0), rect([1.0, 0.0], [2.0, 1.0], p, 4, 4, 1.0)],
    )
}

pub fn three_t_junction(p: usize) -> Fixture {
    Fixture::new(
        "three_t_junction",
        vec![
            rect([0.0, 0.0], [1.0, 2.0], p, 2, 4, 2.0),
            rect([1.0, 0.0], [2.0, 1.0], p, 4, 4, 1.0),
            rect([1.0, 1.0], [2.0, 2.0], p, 4, 4, 1.0),
        ],
    )
}

pub fn four_cross(p: usize) -> Fixture {
    Fixture::new(
        "four_cross",
        vec![
            rect([0.0, 0.0], [1.0, 1.0], p, 2, 2, 5.0),
            rect([1.0, 0.0], [2.0, 1.0], p, 4, 4, 1.0),
            rect([0.0, 1.0], [1.0, 2.0], p, 4, 4, 1.0),
            rect([1.0, 1.0], [2.0, 2.0], p, 2, 2, 5.0),
        ],
    )
}

pub fn checkerboard_fixture(p: usize) -> Fixture {
    let name = if p == 1 { "checkerboard_p1" } else { "checkerboard_p2" };
    Fixture::new(name, checkerboard(p, 0, 1, CoefficientPattern::Good, 1000.0, Annulus::default()).unwrap())
}

/// The configuration after one adaptive refinement round of the corner annulus.
pub fn adaptive_round(p: usize) -> Fixture {
    let mut topo = None;
    let opts = AdaptiveOptions { p, rounds: 2, ..Default::default() };
    run_adaptive(&opts, |row, solved| {
        if row.round == 2 {
            topo = Some(solved.topology.clone());
        }
    })
    .unwrap();
    Fixture { name: "adaptive_round", topology: topo.unwrap() }
}

/// The six oracle geometries with `p = 2` plus the `p = 1` checkerboard.
pub fn all_fixtures() -> Vec<Fixture> {
    vec![
        two_matching(2),
        two_nested(2),
        three_t_junction(2),
        four_cross(2),
        checkerboard_fixture(1),
        checkerboard_fixture(2),
        adaptive_round(2),
    ]
}

pub fn load(x: Point) -> f64 {
    1.0 + x[0] * x[1]
}

/// Monolithic constrained Galerkin solve: the conforming space is the null
/// space of the full interface constraint matrix, found with a dense
/// symmetric eigensolver.
pub fn monolithic(topo: &MultiPatchTopology, couplings: &[InterfaceCoupling], f: &dyn Fn(Point) -> f64) -> Vec<Vec<f64>> {
    let (layouts, systems) = assemble_patches(topo, f).unwrap();
    let cons = build_constraints(topo, couplings, &layouts);
    let n = cons.num_dofs();
    let c = cons.full_matrix();
    let mut cd = DMatrix::<f64>::zeros(c.rows(), n);
    for i in 0..c.rows() {
        for (j, v) in c.row(i) {
            cd[(i, j)] = v;
        }
    }
    let z = null_space(&cd);
    let mut k = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    for (p, sys) in systems.iter().enumerate() {
        let o = cons.offsets[p];
        for i in 0..sys.dim() {
            for (j, v) in sys.matrix.row(i) {
                k[(o + i, o + j)] = v;
            }
            rhs[o + i] = sys.rhs[i];
        }
    }
    let kz = z.transpose() * &k * &z;
    let y = kz.cholesky().expect("reduced stiffness is SPD").solve(&(z.transpose() * rhs));
    let u = z * y;
    split(&u, &cons.offsets)
}

pub fn null_space(c: &DMatrix<f64>) -> DMatrix<f64> {
    let n = c.ncols();
    if c.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    let eig = (c.transpose() * c).symmetric_eigen();
    let top = eig.eigenvalues.amax();
    let keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] < 1e-10 * top).collect();
    DMatrix::from_fn(n, keep.len(), |i, j| eig.eigenvectors[(i, keep[j])])
}

fn split(u: &DVector<f64>, offsets: &[usize]) -> Vec<Vec<f64>> {
    offsets.windows(2).map(|w| u.as_slice()[w[0]..w[1]].to_vec()).collect()
}

/// `||a - b|| / ||b||` over the concatenated patch vectors.
pub fn relative_error(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        for (p, q) in x.iter().zip(y) {
            num += (p - q) * (p - q);
            den += q * q;
        }
    }
    (num / den).sqrt()
}

/// `sum coeff * w[dof]` for each vertex row of patch `k`, on skeleton vectors.
pub fn vertex_values(op: &IetiOperator, k: usize, w: &[f64]) -> Vec<f64> {
    let ni = op.schur(k).n_interior();
    op.constraints().primal[k].iter().map(|row| row.entries.iter().map(|&(d, v)| v * w[d - ni]).sum()).collect()
}

/// Random skeleton vectors, one per patch, with matching values at every
/// vertex. `with_vertices = false` gives dual-space inputs (zero at vertices).
pub fn random_vertex_continuous(op: &IetiOperator, rng: &mut StdRng, with_vertices: bool) -> Vec<Vec<f64>> {
    let basis = op.primal_basis();
    let u_pi: Vec<f64> =
        (0..op.num_primal()).map(|_| if with_vertices { rng.gen_range(-1.0..1.0) } else { 0.0 }).collect();
    (0..op.num_patches())
        .map(|k| {
            let ng = op.schur(k).n_skeleton();
            let mut w: Vec<f64> = (0..ng).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let cv = vertex_values(op, k, &w);
            let psi = &basis.psi[k];
            for (j, &gj) in basis.restriction[k].iter().enumerate() {
                let c = u_pi[gj] - cv[j];
                for (g, x) in w.iter_mut().enumerate() {
                    *x += psi[(g, j)] * c;
                }
            }
            w
        })
        .collect()
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn layouts_of(topo: &MultiPatchTopology) -> Vec<DofLayout> {
    (0..topo.num_patches()).map(|k| DofLayout::for_patch(&topo.patches[k], topo.dirichlet[k])).collect()
}

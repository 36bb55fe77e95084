//! Patch geometry maps, patches and multi-patch topology.

mod topology;

pub use topology::{
    build_topology, check_assumptions, AssumptionReport, EdgeRef, Interface, MultiPatchTopology,
    PatchAssumptions, Vertex, VertexIncidence, DEFAULT_TOPOLOGY_TOL,
};

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::linalg::DenseMatrix;
use crate::math::{cos, hypot, sin};
use crate::splines::{KnotVector, SplineError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("parameter ({0}, {1}) outside the unit square")]
    OutOfDomain(f64, f64),
    #[error("invalid geometry: {0}")]
    InvalidGeometry(&'static str),
    #[error("non-admissible decomposition: {0}")]
    NonAdmissibleDecomposition(&'static str),
    #[error(transparent)]
    Spline(#[from] SplineError),
}

pub type Result<T> = core::result::Result<T, GeometryError>;

pub type Point = [f64; 2];
/// Row-major 2x2 Jacobian: `j[r][c] = d x_r / d xi_c`.
pub type Jacobian = [[f64; 2]; 2];

/// Second derivatives `[d11, d12, d22]` of both components.
pub type Hessian = [[f64; 2]; 3];

/// Parametrization of a single patch over the unit square.
#[derive(Debug, Clone, PartialEq)]
pub enum GeometryMap {
    /// Corners in lexicographic order (0,0), (1,0), (0,1), (1,1).
    Bilinear { corners: [Point; 4] },
    /// Polar map: xi1 radial, xi2 angular.
    AnnulusSector { center: Point, r_inner: f64, r_outer: f64, theta0: f64, theta1: f64 },
    /// Tensor-product spline with control points in lexicographic order.
    Spline { knots: [KnotVector; 2], control: Vec<Point> },
}

fn check_param(xi: Point) -> Result<()> {
    let ok = |v: f64| (-1e-12..=1.0 + 1e-12).contains(&v);
    if ok(xi[0]) && ok(xi[1]) {
        Ok(())
    } else {
        Err(GeometryError::OutOfDomain(xi[0], xi[1]))
    }
}

impl GeometryMap {
    pub fn identity() -> Self {
        Self::rectangle([0.0, 0.0], [1.0, 1.0])
    }

    /// Axis-aligned rectangle `[lo, hi]`.
    pub fn rectangle(lo: Point, hi: Point) -> Self {
        GeometryMap::Bilinear { corners: [lo, [hi[0], lo[1]], [lo[0], hi[1]], hi] }
    }

    pub fn spline(knots: [KnotVector; 2], control: Vec<Point>) -> Result<Self> {
        if control.len() != knots[0].num_basis() * knots[1].num_basis() {
            return Err(GeometryError::InvalidGeometry("control net size does not match the knots"));
        }
        Ok(GeometryMap::Spline { knots, control })
    }

    pub fn eval(&self, xi: Point) -> Result<Point> {
        check_param(xi)?;
        Ok(match self {
            GeometryMap::Bilinear { corners: c } => {
                let (u, v) = (xi[0], xi[1]);
                let w = [(1.0 - u) * (1.0 - v), u * (1.0 - v), (1.0 - u) * v, u * v];
                let mut p = [0.0; 2];
                for k in 0..4 {
                    p[0] += w[k] * c[k][0];
                    p[1] += w[k] * c[k][1];
                }
                p
            }
            GeometryMap::AnnulusSector { center, r_inner, r_outer, theta0, theta1 } => {
                let r = r_inner + (r_outer - r_inner) * xi[0];
                let t = theta0 + (theta1 - theta0) * xi[1];
                [center[0] + r * cos(t), center[1] + r * sin(t)]
            }
            GeometryMap::Spline { knots, control } => {
                let (f1, b1) = knots[0].eval_basis(xi[0])?;
                let (f2, b2) = knots[1].eval_basis(xi[1])?;
                let n1 = knots[0].num_basis();
                let mut p = [0.0; 2];
                for (j, wj) in b2.iter().enumerate() {
                    for (i, wi) in b1.iter().enumerate() {
                        let c = control[(f1 + i) + n1 * (f2 + j)];
                        p[0] += wi * wj * c[0];
                        p[1] += wi * wj * c[1];
                    }
                }
                p
            }
        })
    }

    pub fn jacobian(&self, xi: Point) -> Result<Jacobian> {
        Ok(self.derivatives(xi)?.0)
    }

    /// Jacobian and second derivatives.
    pub fn derivatives(&self, xi: Point) -> Result<(Jacobian, Hessian)> {
        check_param(xi)?;
        Ok(match self {
            GeometryMap::Bilinear { corners: c } => {
                let (u, v) = (xi[0], xi[1]);
                let mut j = [[0.0; 2]; 2];
                let mut h = [[0.0; 2]; 3];
                for r in 0..2 {
                    j[r][0] = (1.0 - v) * (c[1][r] - c[0][r]) + v * (c[3][r] - c[2][r]);
                    j[r][1] = (1.0 - u) * (c[2][r] - c[0][r]) + u * (c[3][r] - c[1][r]);
                    h[1][r] = c[0][r] - c[1][r] - c[2][r] + c[3][r];
                }
                (j, h)
            }
            GeometryMap::AnnulusSector { r_inner, r_outer, theta0, theta1, .. } => {
                let dr = r_outer - r_inner;
                let dt = theta1 - theta0;
                let r = r_inner + dr * xi[0];
                let t = theta0 + dt * xi[1];
                let (s, c) = (sin(t), cos(t));
                let j = [[dr * c, -r * dt * s], [dr * s, r * dt * c]];
                let h = [[0.0, 0.0], [-dr * dt * s, dr * dt * c], [-r * dt * dt * c, -r * dt * dt * s]];
                (j, h)
            }
            GeometryMap::Spline { knots, control } => {
                let (f1, d1) = knots[0].eval_derivs(xi[0], 2)?;
                let (f2, d2) = knots[1].eval_derivs(xi[1], 2)?;
                let n1 = knots[0].num_basis();
                let mut j = [[0.0; 2]; 2];
                let mut h = [[0.0; 2]; 3];
                for b in 0..d2[0].len() {
                    for a in 0..d1[0].len() {
                        let c = control[(f1 + a) + n1 * (f2 + b)];
                        for r in 0..2 {
                            j[r][0] += d1[1][a] * d2[0][b] * c[r];
                            j[r][1] += d1[0][a] * d2[1][b] * c[r];
                            h[0][r] += d1[2][a] * d2[0][b] * c[r];
                            h[1][r] += d1[1][a] * d2[1][b] * c[r];
                            h[2][r] += d1[0][a] * d2[2][b] * c[r];
                        }
                    }
                }
                (j, h)
            }
        })
    }

    /// The map composed with the affine map of `[a0, a1] x [b0, b1]` onto the unit square.
    pub fn restrict(&self, a: [f64; 2], b: [f64; 2]) -> Result<Self> {
        Ok(match self {
            GeometryMap::Bilinear { .. } => GeometryMap::Bilinear {
                corners: [
                    self.eval([a[0], b[0]])?,
                    self.eval([a[1], b[0]])?,
                    self.eval([a[0], b[1]])?,
                    self.eval([a[1], b[1]])?,
                ],
            },
            GeometryMap::AnnulusSector { center, r_inner, r_outer, theta0, theta1 } => {
                let dr = r_outer - r_inner;
                let dt = theta1 - theta0;
                GeometryMap::AnnulusSector {
                    center: *center,
                    r_inner: r_inner + dr * a[0],
                    r_outer: r_inner + dr * a[1],
                    theta0: theta0 + dt * b[0],
                    theta1: theta0 + dt * b[1],
                }
            }
            GeometryMap::Spline { knots, control } => {
                let (k1, m1) = knots[0].restrict_with_matrix(a[0], a[1])?;
                let (k2, m2) = knots[1].restrict_with_matrix(b[0], b[1])?;
                let (n1, n2) = (knots[0].num_basis(), knots[1].num_basis());
                let mut new = Vec::with_capacity(k1.num_basis() * k2.num_basis());
                for j in 0..k2.num_basis() {
                    for i in 0..k1.num_basis() {
                        let mut p = [0.0; 2];
                        for jj in 0..n2 {
                            let w2 = m2[(j, jj)];
                            if w2 == 0.0 {
                                continue;
                            }
                            for ii in 0..n1 {
                                let w = m1[(i, ii)] * w2;
                                if w != 0.0 {
                                    p[0] += w * control[ii + n1 * jj][0];
                                    p[1] += w * control[ii + n1 * jj][1];
                                }
                            }
                        }
                        new.push(p);
                    }
                }
                GeometryMap::Spline { knots: [k1, k2], control: new }
            }
        })
    }
}

pub fn det(j: &Jacobian) -> f64 {
    j[0][0] * j[1][1] - j[0][1] * j[1][0]
}

/// Side of the parameter square. Edge parameters increase along the
/// running parametric direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    /// xi2 = 0
    South,
    /// xi1 = 1
    East,
    /// xi2 = 1
    North,
    /// xi1 = 0
    West,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::South, Side::East, Side::North, Side::West];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Parametric direction running along the side.
    pub fn direction(self) -> usize {
        match self {
            Side::South | Side::North => 0,
            Side::East | Side::West => 1,
        }
    }

    /// Parameter point at edge parameter `t`.
    pub fn point(self, t: f64) -> Point {
        match self {
            Side::South => [t, 0.0],
            Side::East => [1.0, t],
            Side::North => [t, 1.0],
            Side::West => [0.0, t],
        }
    }

    /// Lexicographic corner indices at `t = 0` and `t = 1`.
    pub fn corners(self) -> [usize; 2] {
        match self {
            Side::South => [0, 1],
            Side::East => [1, 3],
            Side::North => [2, 3],
            Side::West => [0, 2],
        }
    }

    /// Whether the outward normal points along the positive axis.
    pub fn is_max(self) -> bool {
        matches!(self, Side::East | Side::North)
    }
}

/// Parameter point of a lexicographic corner.
pub fn corner_point(corner: usize) -> Point {
    [(corner & 1) as f64, (corner >> 1) as f64]
}

/// A mapped tensor-product subdomain with its spline space and coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub geometry: GeometryMap,
    pub knots: [KnotVector; 2],
    pub nu: f64,
    pub level: u32,
    /// Child indices (0..4) along the chain of splits that produced the patch.
    pub lineage: Vec<u8>,
}

impl Patch {
    pub fn new(geometry: GeometryMap, knots: [KnotVector; 2], nu: f64) -> Result<Self> {
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(GeometryError::InvalidGeometry("diffusion coefficient must be positive"));
        }
        if knots[0].degree() != knots[1].degree() {
            return Err(GeometryError::InvalidGeometry("both directions must share the degree"));
        }
        Ok(Self { geometry, knots, nu, level: 0, lineage: Vec::new() })
    }

    pub fn degree(&self) -> usize {
        self.knots[0].degree()
    }

    pub fn num_basis(&self) -> [usize; 2] {
        [self.knots[0].num_basis(), self.knots[1].num_basis()]
    }

    /// Parametric grid size: the larger of both directions.
    pub fn h_hat(&self) -> f64 {
        self.knots[0].h_hat().max(self.knots[1].h_hat())
    }

    /// Patch diameter estimated from boundary samples.
    pub fn diameter(&self) -> f64 {
        let pts = self.boundary_samples(8);
        let mut d: f64 = 0.0;
        for (i, p) in pts.iter().enumerate() {
            for q in &pts[i + 1..] {
                d = d.max(hypot(p[0] - q[0], p[1] - q[1]));
            }
        }
        d
    }

    /// Physical grid size `H * h_hat`.
    pub fn h(&self) -> f64 {
        self.diameter() * self.h_hat()
    }

    fn boundary_samples(&self, per_edge: usize) -> Vec<Point> {
        let mut out = vec![];
        for side in Side::ALL {
            for s in 0..per_edge {
                let t = s as f64 / per_edge as f64;
                out.push(self.geometry.eval(side.point(t)).expect("in domain"));
            }
        }
        out
    }

    /// Knot vector of the trace on `side`.
    pub fn edge_knots(&self, side: Side) -> &KnotVector {
        &self.knots[side.direction()]
    }
}

/// Evaluates a tensor-product spline over `knots` with lexicographic coefficients.
pub fn eval_tensor(knots: &[KnotVector; 2], coeffs: &[f64], xi: Point) -> Result<f64> {
    let (f1, b1) = knots[0].eval_basis(xi[0])?;
    let (f2, b2) = knots[1].eval_basis(xi[1])?;
    let n1 = knots[0].num_basis();
    let mut s = 0.0;
    for (j, wj) in b2.iter().enumerate() {
        for (i, wi) in b1.iter().enumerate() {
            s += wi * wj * coeffs[(f1 + i) + n1 * (f2 + j)];
        }
    }
    Ok(s)
}

/// Dense 2x2 Jacobian as a matrix (for callers that want linalg types).
pub fn jacobian_matrix(j: &Jacobian) -> DenseMatrix {
    DenseMatrix::from_fn(2, 2, |r, c| j[r][c])
}

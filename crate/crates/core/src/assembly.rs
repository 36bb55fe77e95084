//! Patch-local Galerkin assembly and the interior-first DOF layout.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::geometry::{det, GeometryError, Patch, Point, Side};
use crate::linalg::SparseMatrix;
use crate::quadrature::gauss_legendre;
use crate::splines::{KnotVector, SplineError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AssemblyError {
    #[error("singular Jacobian at parameter ({0}, {1})")]
    SingularJacobian(f64, f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Spline(#[from] SplineError),
}

pub type Result<T> = core::result::Result<T, AssemblyError>;

/// Numbering of the tensor-product basis of one patch: interior functions
/// first, then boundary functions, each in lexicographic order; functions
/// touching a Dirichlet side are removed.
#[derive(Debug, Clone, PartialEq)]
pub struct DofLayout {
    shape: [usize; 2],
    dirichlet: [bool; 4],
    lex_to_local: Vec<Option<usize>>,
    local_to_lex: Vec<usize>,
    n_interior: usize,
}

impl DofLayout {
    pub fn new(shape: [usize; 2], dirichlet: [bool; 4]) -> Self {
        let [n1, n2] = shape;
        let mut lex_to_local = vec![None; n1 * n2];
        let mut local_to_lex = Vec::with_capacity(n1 * n2);
        let is_interior = |i1: usize, i2: usize| i1 > 0 && i2 > 0 && i1 + 1 < n1 && i2 + 1 < n2;
        let removed = |i1: usize, i2: usize| {
            (dirichlet[Side::South.index()] && i2 == 0)
                || (dirichlet[Side::East.index()] && i1 + 1 == n1)
                || (dirichlet[Side::North.index()] && i2 + 1 == n2)
                || (dirichlet[Side::West.index()] && i1 == 0)
        };
        for i2 in 0..n2 {
            for i1 in 0..n1 {
                if is_interior(i1, i2) {
                    lex_to_local[i1 + n1 * i2] = Some(local_to_lex.len());
                    local_to_lex.push(i1 + n1 * i2);
                }
            }
        }
        let n_interior = local_to_lex.len();
        for i2 in 0..n2 {
            for i1 in 0..n1 {
                if !is_interior(i1, i2) && !removed(i1, i2) {
                    lex_to_local[i1 + n1 * i2] = Some(local_to_lex.len());
                    local_to_lex.push(i1 + n1 * i2);
                }
            }
        }
        Self { shape, dirichlet, lex_to_local, local_to_lex, n_interior }
    }

    pub fn for_patch(patch: &Patch, dirichlet: [bool; 4]) -> Self {
        Self::new(patch.num_basis(), dirichlet)
    }

    pub fn shape(&self) -> [usize; 2] {
        self.shape
    }

    pub fn dirichlet(&self) -> [bool; 4] {
        self.dirichlet
    }

    pub fn num_tensor(&self) -> usize {
        self.shape[0] * self.shape[1]
    }

    pub fn num_dofs(&self) -> usize {
        self.local_to_lex.len()
    }

    pub fn num_interior(&self) -> usize {
        self.n_interior
    }

    pub fn num_boundary(&self) -> usize {
        self.num_dofs() - self.n_interior
    }

    pub fn lex(&self, i1: usize, i2: usize) -> usize {
        i1 + self.shape[0] * i2
    }

    pub fn local(&self, lex: usize) -> Option<usize> {
        self.lex_to_local[lex]
    }

    pub fn lex_of(&self, local: usize) -> usize {
        self.local_to_lex[local]
    }

    pub fn lex_to_local(&self) -> &[Option<usize>] {
        &self.lex_to_local
    }

    /// Lexicographic indices of the trace functions on `side`, by increasing edge parameter.
    pub fn edge_trace(&self, side: Side) -> Vec<usize> {
        let [n1, n2] = self.shape;
        match side {
            Side::South => (0..n1).collect(),
            Side::North => (0..n1).map(|i| i + n1 * (n2 - 1)).collect(),
            Side::West => (0..n2).map(|j| n1 * j).collect(),
            Side::East => (0..n2).map(|j| n1 - 1 + n1 * j).collect(),
        }
    }

    /// Local indices of the trace functions on `side` (None if removed).
    pub fn edge_dofs(&self, side: Side) -> Vec<Option<usize>> {
        self.edge_trace(side).into_iter().map(|l| self.lex_to_local[l]).collect()
    }

    /// Lexicographic index of the function that interpolates at a corner.
    pub fn corner_lex(&self, corner: usize) -> usize {
        let [n1, n2] = self.shape;
        let i1 = if corner & 1 == 1 { n1 - 1 } else { 0 };
        let i2 = if corner & 2 == 2 { n2 - 1 } else { 0 };
        i1 + n1 * i2
    }

    /// Expands local coefficients to all tensor functions (removed ones are zero).
    pub fn to_tensor(&self, local: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_tensor()];
        for (k, &l) in self.local_to_lex.iter().enumerate() {
            out[l] = local[k];
        }
        out
    }

    pub fn from_tensor(&self, tensor: &[f64]) -> Vec<f64> {
        self.local_to_lex.iter().map(|&l| tensor[l]).collect()
    }
}

/// A patch stiffness matrix and load vector. After Dirichlet elimination the
/// first `n_interior` unknowns are the interior ones.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    pub n_interior: usize,
}

impl LocalSystem {
    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    fn block(&self, rows: core::ops::Range<usize>, cols: core::ops::Range<usize>) -> SparseMatrix {
        let map: Vec<Option<usize>> =
            (0..self.dim()).map(|j| if cols.contains(&j) { Some(j - cols.start) } else { None }).collect();
        let r: Vec<usize> = rows.collect();
        self.matrix.submatrix(&r, &map, cols.len())
    }

    pub fn a_ii(&self) -> SparseMatrix {
        self.block(0..self.n_interior, 0..self.n_interior)
    }

    pub fn a_ig(&self) -> SparseMatrix {
        self.block(0..self.n_interior, self.n_interior..self.dim())
    }

    pub fn a_gg(&self) -> SparseMatrix {
        self.block(self.n_interior..self.dim(), self.n_interior..self.dim())
    }
}

/// (first function, quadrature points, weights, values[q][a], derivs[q][a])
type ElementData = (usize, Vec<f64>, Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>);

/// Per-direction basis data on every element at the quadrature points.
struct ElementBasis {
    elements: Vec<ElementData>,
}

fn element_basis(kv: &KnotVector, nq: usize) -> Result<ElementBasis> {
    let (x, w) = gauss_legendre(nq);
    let bp = kv.breakpoints();
    let mut elements = Vec::with_capacity(bp.len() - 1);
    for e in bp.windows(2) {
        let (a, b) = (e[0], e[1]);
        let mid = 0.5 * (a + b);
        let first = kv.find_span(mid)? - kv.degree();
        let mut pts = Vec::with_capacity(nq);
        let mut wts = Vec::with_capacity(nq);
        let mut vals = Vec::with_capacity(nq);
        let mut ders = Vec::with_capacity(nq);
        for q in 0..nq {
            let t = a + (b - a) * x[q];
            // Evaluate inside the element to avoid span ambiguity at knots.
            let (f, d) = kv.eval_derivs(t.clamp(a + 1e-300, b), 1)?;
            debug_assert_eq!(f, first);
            pts.push(t);
            wts.push(w[q] * (b - a));
            vals.push(d[0].clone());
            ders.push(d[1].clone());
        }
        elements.push((first, pts, wts, vals, ders));
    }
    Ok(ElementBasis { elements })
}

/// Sparsity pattern of the tensor stiffness matrix in lexicographic order.
fn tensor_pattern(n1: usize, n2: usize, p: usize) -> (Vec<usize>, Vec<usize>) {
    let mut row_ptr = Vec::with_capacity(n1 * n2 + 1);
    let mut col_idx = Vec::new();
    row_ptr.push(0);
    for i2 in 0..n2 {
        for i1 in 0..n1 {
            for j2 in i2.saturating_sub(p)..=(i2 + p).min(n2 - 1) {
                for j1 in i1.saturating_sub(p)..=(i1 + p).min(n1 - 1) {
                    col_idx.push(j1 + n1 * j2);
                }
            }
            row_ptr.push(col_idx.len());
        }
    }
    (row_ptr, col_idx)
}

/// Stiffness `int nu grad(phi_j) . grad(phi_i)` and load `int f phi_i` over all
/// tensor-product functions in lexicographic order, with `p + 1` Gauss points
/// per direction and element.
pub fn assemble<F: Fn(Point) -> f64>(patch: &Patch, rhs: F) -> Result<LocalSystem> {
    let p = patch.degree();
    let [n1, n2] = patch.num_basis();
    let nq = p + 1;
    let b1 = element_basis(&patch.knots[0], nq)?;
    let b2 = element_basis(&patch.knots[1], nq)?;
    let (row_ptr, col_idx) = tensor_pattern(n1, n2, p);
    let mut values = vec![0.0; col_idx.len()];
    let mut load = vec![0.0; n1 * n2];
    let nloc = (p + 1) * (p + 1);
    let mut kloc = vec![0.0; nloc * nloc];
    let mut floc = vec![0.0; nloc];
    let mut grad = vec![[0.0; 2]; nloc];
    let mut val = vec![0.0; nloc];
    for e2 in &b2.elements {
        for e1 in &b1.elements {
            kloc.fill(0.0);
            floc.fill(0.0);
            for q2 in 0..nq {
                for q1 in 0..nq {
                    let xi = [e1.1[q1], e2.1[q2]];
                    let j = patch.geometry.jacobian(xi)?;
                    let dj = det(&j);
                    if dj.abs() < 1e-14 {
                        return Err(AssemblyError::SingularJacobian(xi[0], xi[1]));
                    }
                    let w = e1.2[q1] * e2.2[q2] * dj.abs();
                    // J^{-1} J^{-T}
                    let inv = [[j[1][1] / dj, -j[0][1] / dj], [-j[1][0] / dj, j[0][0] / dj]];
                    let m00 = inv[0][0] * inv[0][0] + inv[0][1] * inv[0][1];
                    let m01 = inv[0][0] * inv[1][0] + inv[0][1] * inv[1][1];
                    let m11 = inv[1][0] * inv[1][0] + inv[1][1] * inv[1][1];
                    let s = patch.nu * w;
                    let fval = rhs(patch.geometry.eval(xi)?) * w;
                    for b in 0..=p {
                        for a in 0..=p {
                            let k = a + (p + 1) * b;
                            grad[k] = [e1.4[q1][a] * e2.3[q2][b], e1.3[q1][a] * e2.4[q2][b]];
                            val[k] = e1.3[q1][a] * e2.3[q2][b];
                        }
                    }
                    for k in 0..nloc {
                        let g = grad[k];
                        let mg = [s * (m00 * g[0] + m01 * g[1]), s * (m01 * g[0] + m11 * g[1])];
                        let row = &mut kloc[k * nloc..(k + 1) * nloc];
                        for (r, h) in row.iter_mut().zip(&grad) {
                            *r += mg[0] * h[0] + mg[1] * h[1];
                        }
                        floc[k] += fval * val[k];
                    }
                }
            }
            let (s1, s2) = (e1.0, e2.0);
            for b in 0..=p {
                for a in 0..=p {
                    let (i1, i2) = (s1 + a, s2 + b);
                    let row = i1 + n1 * i2;
                    let k = a + (p + 1) * b;
                    load[row] += floc[k];
                    let j1lo = i1.saturating_sub(p);
                    let j2lo = i2.saturating_sub(p);
                    let width = (i1 + p).min(n1 - 1) - j1lo + 1;
                    for bb in 0..=p {
                        for aa in 0..=p {
                            let (j1, j2) = (s1 + aa, s2 + bb);
                            let pos = row_ptr[row] + (j2 - j2lo) * width + (j1 - j1lo);
                            debug_assert_eq!(col_idx[pos], j1 + n1 * j2);
                            values[pos] += kloc[k * nloc + aa + (p + 1) * bb];
                        }
                    }
                }
            }
        }
    }
    let matrix = SparseMatrix::new(n1 * n2, n1 * n2, row_ptr, col_idx, values)
        .expect("tensor pattern is valid");
    Ok(LocalSystem { matrix, rhs: load, n_interior: 0 })
}

/// Removes functions touching Dirichlet sides and reorders to the layout numbering.
pub fn eliminate_dirichlet(raw: &LocalSystem, layout: &DofLayout) -> LocalSystem {
    let rows: Vec<usize> = (0..layout.num_dofs()).map(|k| layout.lex_of(k)).collect();
    let matrix = raw.matrix.submatrix(&rows, layout.lex_to_local(), layout.num_dofs());
    let rhs = rows.iter().map(|&l| raw.rhs[l]).collect();
    LocalSystem { matrix, rhs, n_interior: layout.num_interior() }
}

/// `assemble` followed by `eliminate_dirichlet`.
pub fn assemble_local<F: Fn(Point) -> f64>(patch: &Patch, layout: &DofLayout, rhs: F) -> Result<LocalSystem> {
    Ok(eliminate_dirichlet(&assemble(patch, rhs)?, layout))
}

//! Non-matching interface coupling: ordering, embeddings and constraints.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::assembly::DofLayout;
use crate::geometry::{EdgeRef, MultiPatchTopology, Side, VertexIncidence};
use crate::linalg::{DenseMatrix, SparseMatrix, TripletBuilder};
use crate::splines::{insert_knots, EmbeddingMatrix, KnotVector, SplineError};

/// Basis values below this are treated as zero when building constraints.
const SUPPORT_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CouplingError {
    #[error("interface {interface}: neither trace space contains the other")]
    NotNested { interface: usize },
    #[error(transparent)]
    Spline(#[from] SplineError),
}

pub type Result<T> = core::result::Result<T, CouplingError>;

/// One interface with its refined (fine) and coarse side. Coarse edge
/// parameter `s = a + (b - a) t` (or with `1 - t` when reversed) for fine
/// edge parameter `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceCoupling {
    pub interface: usize,
    pub fine: EdgeRef,
    pub coarse: EdgeRef,
    pub coarse_range: [f64; 2],
    pub reversed: bool,
    /// `n_fine_trace x n_coarse_trace`, rows in fine trace order, columns in
    /// coarse trace order.
    pub embedding: EmbeddingMatrix,
}

impl InterfaceCoupling {
    pub fn coarse_param(&self, t: f64) -> f64 {
        let u = if self.reversed { 1.0 - t } else { t };
        self.coarse_range[0] + (self.coarse_range[1] - self.coarse_range[0]) * u
    }
}

fn reverse_rows(m: &DenseMatrix) -> DenseMatrix {
    let r = m.rows();
    DenseMatrix::from_fn(r, m.cols(), |i, j| m[(r - 1 - i, j)])
}

fn reverse_cols(m: &DenseMatrix) -> DenseMatrix {
    let c = m.cols();
    DenseMatrix::from_fn(m.rows(), c, |i, j| m[(i, c - 1 - j)])
}

fn clean(mut m: DenseMatrix) -> EmbeddingMatrix {
    for v in m.as_mut_slice() {
        if v.abs() < 1e-15 {
            *v = 0.0;
        }
    }
    EmbeddingMatrix::from_matrix(m)
}

/// Decides the refined side of every interface and computes its embedding.
/// Equal trace spaces on matching edges make the lower patch index the
/// coarse side; on T-junction interfaces the sub-edge side must be refined.
pub fn order_interfaces(topo: &MultiPatchTopology) -> Result<Vec<InterfaceCoupling>> {
    let mut out = Vec::with_capacity(topo.interfaces.len());
    for (idx, f) in topo.interfaces.iter().enumerate() {
        let sub_kv = topo.patches[f.sub.patch].edge_knots(f.sub.side);
        let host_kv = topo.patches[f.host.patch].edge_knots(f.host.side);
        let (host_r, restrict) = if f.is_matching() {
            (host_kv.clone(), DenseMatrix::identity(host_kv.num_basis()))
        } else {
            host_kv.restrict_with_matrix(f.host_range[0], f.host_range[1])?
        };
        // Host space restricted to the shared segment, in the sub edge's parameter.
        let (host_in_sub, restrict) =
            if f.reversed { (host_r.reversed(), reverse_rows(&restrict)) } else { (host_r, restrict) };
        let sub_refines = sub_kv.contains(&host_in_sub);
        let host_refines = host_in_sub.contains(sub_kv);
        let sub_is_fine = if f.is_matching() {
            match (sub_refines, host_refines) {
                (true, true) => f.sub.patch > f.host.patch,
                (true, false) => true,
                (false, true) => false,
                (false, false) => return Err(CouplingError::NotNested { interface: idx }),
            }
        } else if sub_refines {
            true
        } else {
            return Err(CouplingError::NotNested { interface: idx });
        };
        let coupling = if sub_is_fine {
            let e = insert_knots(&host_in_sub, sub_kv)?;
            let m = e.matrix().matmul(&restrict).expect("shapes agree");
            InterfaceCoupling {
                interface: idx,
                fine: f.sub,
                coarse: f.host,
                coarse_range: f.host_range,
                reversed: f.reversed,
                embedding: clean(m),
            }
        } else {
            // Matching edge with the host refined.
            let sub_in_host = if f.reversed { sub_kv.reversed() } else { sub_kv.clone() };
            let e = insert_knots(&sub_in_host, host_kv)?;
            let m = if f.reversed { reverse_cols(e.matrix()) } else { e.matrix().clone() };
            InterfaceCoupling {
                interface: idx,
                fine: f.host,
                coarse: f.sub,
                coarse_range: [0.0, 1.0],
                reversed: f.reversed,
                embedding: clean(m),
            }
        };
        out.push(coupling);
    }
    Ok(out)
}

/// One row of the full constraint matrix: `+1` at the fine DOF and the
/// negated embedding coefficients at coarse DOFs.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintRow {
    pub coupling: usize,
    pub trace_index: usize,
    /// `(patch, local dof, value)`; the first entry is the `+1`.
    pub entries: Vec<(usize, usize, f64)>,
}

impl ConstraintRow {
    pub fn fine_patch(&self) -> usize {
        self.entries[0].0
    }

    pub fn fine_dof(&self) -> usize {
        self.entries[0].1
    }
}

/// A vertex evaluation functional on one patch: `sum coeff * u[dof]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalRow {
    pub primal: usize,
    pub entries: Vec<(usize, f64)>,
}

/// Dual (Lagrange multiplier) and primal (vertex value) constraints.
#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    /// All rows before the primal/dual split, ordered by (fine patch, coupling, trace index).
    pub rows: Vec<ConstraintRow>,
    /// Indices into `rows` that stay dual; position = multiplier index.
    pub dual_rows: Vec<usize>,
    /// Indices into `rows` whose `+1` sits at a vertex-supported DOF.
    pub vertex_rows: Vec<usize>,
    /// Local DOFs nonzero at some vertex of the patch closure.
    pub vertex_dofs: Vec<BTreeSet<usize>>,
    /// Vertex evaluation rows per patch.
    pub primal: Vec<Vec<PrimalRow>>,
    /// Physical vertex index of every primal DOF.
    pub primal_vertices: Vec<usize>,
    /// Selection set `I_Z` as `(patch, local dof, multiplier)`; the last entry is `Z`.
    pub selection: Vec<(usize, usize, usize)>,
    /// Dual-row entries per patch as `(multiplier, local dof, value)`.
    pub patch_entries: Vec<Vec<(usize, usize, f64)>>,
    /// Offsets of every patch in the concatenated DOF vector.
    pub offsets: Vec<usize>,
}

impl ConstraintSystem {
    pub fn num_dual(&self) -> usize {
        self.dual_rows.len()
    }

    pub fn num_primal(&self) -> usize {
        self.primal_vertices.len()
    }

    pub fn num_dofs(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    fn to_matrix(&self, rows: &[usize]) -> SparseMatrix {
        let mut b = TripletBuilder::new(rows.len(), self.num_dofs());
        for (r, &i) in rows.iter().enumerate() {
            for &(k, d, v) in &self.rows[i].entries {
                b.push(r, self.offsets[k] + d, v).expect("index in range");
            }
        }
        b.build()
    }

    /// Full constraint matrix over the concatenated DOF vector.
    pub fn full_matrix(&self) -> SparseMatrix {
        self.to_matrix(&(0..self.rows.len()).collect::<Vec<_>>())
    }

    /// Dual constraint matrix `B` over the concatenated DOF vector.
    pub fn dual_matrix(&self) -> SparseMatrix {
        self.to_matrix(&self.dual_rows)
    }

    /// Primal constraint matrix mapping concatenated DOFs to primal values,
    /// one row per (patch, primal DOF) pair.
    pub fn primal_matrix(&self) -> SparseMatrix {
        let n: usize = self.primal.iter().map(|p| p.len()).sum();
        let mut b = TripletBuilder::new(n, self.num_dofs());
        let mut r = 0;
        for (k, rows) in self.primal.iter().enumerate() {
            for row in rows {
                for &(d, v) in &row.entries {
                    b.push(r, self.offsets[k] + d, v).expect("index in range");
                }
                r += 1;
            }
        }
        b.build()
    }
}

/// Basis functions of `kv` that do not vanish at `t`.
fn supported(kv: &KnotVector, t: f64) -> Vec<(usize, f64)> {
    let (first, vals) = kv.eval_basis(t).expect("edge parameter in [0, 1]");
    vals.into_iter().enumerate().filter(|(_, v)| *v > SUPPORT_TOL).map(|(j, v)| (first + j, v)).collect()
}

/// Builds all constraint rows, routes vertex rows to the primal set and
/// computes the selection set.
pub fn build_constraints(
    topo: &MultiPatchTopology,
    couplings: &[InterfaceCoupling],
    layouts: &[DofLayout],
) -> ConstraintSystem {
    let n = topo.num_patches();
    let mut offsets = vec![0usize; n + 1];
    for k in 0..n {
        offsets[k + 1] = offsets[k] + layouts[k].num_dofs();
    }

    // Vertex-supported DOFs and primal rows.
    let mut vertex_dofs = vec![BTreeSet::new(); n];
    let mut primal = vec![Vec::new(); n];
    let mut primal_vertices = Vec::new();
    for (vi, v) in topo.vertices.iter().enumerate() {
        let mut rows: Vec<(usize, Vec<(usize, f64)>)> = Vec::new();
        for inc in &v.incidences {
            match *inc {
                VertexIncidence::Corner { patch, corner } => {
                    let l = &layouts[patch];
                    if let Some(d) = l.local(l.corner_lex(corner)) {
                        vertex_dofs[patch].insert(d);
                        rows.push((patch, vec![(d, 1.0)]));
                    }
                }
                VertexIncidence::EdgeInterior { patch, side, t } => {
                    let l = &layouts[patch];
                    let trace = l.edge_dofs(side);
                    let kv = topo.patches[patch].edge_knots(side);
                    let entries: Vec<(usize, f64)> =
                        supported(kv, t).into_iter().filter_map(|(j, w)| trace[j].map(|d| (d, w))).collect();
                    for &(d, _) in &entries {
                        vertex_dofs[patch].insert(d);
                    }
                    if !entries.is_empty() {
                        rows.push((patch, entries));
                    }
                }
            }
        }
        if rows.is_empty() {
            continue;
        }
        let id = primal_vertices.len();
        primal_vertices.push(vi);
        for (patch, entries) in rows {
            primal[patch].push(PrimalRow { primal: id, entries });
        }
    }

    let mut rows = Vec::new();
    for (ci, c) in couplings.iter().enumerate() {
        let lf = &layouts[c.fine.patch];
        let lc = &layouts[c.coarse.patch];
        let fine_dofs = lf.edge_dofs(c.fine.side);
        let coarse_dofs = lc.edge_dofs(c.coarse.side);
        let e = c.embedding.matrix();
        for (t, fd) in fine_dofs.iter().enumerate() {
            let Some(fd) = *fd else { continue };
            let mut entries = vec![(c.fine.patch, fd, 1.0)];
            for (j, cd) in coarse_dofs.iter().enumerate() {
                let w = e[(t, j)];
                if let (Some(cd), true) = (*cd, w.abs() > SUPPORT_TOL) {
                    entries.push((c.coarse.patch, cd, -w));
                }
            }
            rows.push(ConstraintRow { coupling: ci, trace_index: t, entries });
        }
    }
    rows.sort_by_key(|r| (r.fine_patch(), r.coupling, r.trace_index));

    let mut dual_rows = Vec::new();
    let mut vertex_rows = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        if vertex_dofs[r.fine_patch()].contains(&r.fine_dof()) {
            vertex_rows.push(i);
        } else {
            dual_rows.push(i);
        }
    }
    let selection: Vec<(usize, usize, usize)> =
        dual_rows.iter().enumerate().map(|(m, &i)| (rows[i].fine_patch(), rows[i].fine_dof(), m)).collect();
    let mut patch_entries = vec![Vec::new(); n];
    for (m, &i) in dual_rows.iter().enumerate() {
        for &(k, d, v) in &rows[i].entries {
            patch_entries[k].push((m, d, v));
        }
    }
    ConstraintSystem {
        rows,
        dual_rows,
        vertex_rows,
        vertex_dofs,
        primal,
        primal_vertices,
        selection,
        patch_entries,
        offsets,
    }
}

/// Every row has exactly one entry equal to `+1` and nonpositive entries otherwise.
pub fn check_one_positive(sys: &ConstraintSystem) -> bool {
    sys.rows.iter().all(|r| {
        r.entries[0].2 == 1.0 && r.entries[1..].iter().all(|e| e.2 <= 0.0) && {
            let mut seen = BTreeSet::new();
            r.entries.iter().all(|e| seen.insert((e.0, e.1)))
        }
    })
}

/// The selection map is injective, hits every dual row and avoids vertex DOFs.
pub fn check_selection(sys: &ConstraintSystem) -> bool {
    let mut rows = BTreeSet::new();
    let mut dofs = BTreeSet::new();
    for &(k, d, m) in &sys.selection {
        if !rows.insert(m) || !dofs.insert((k, d)) || sys.vertex_dofs[k].contains(&d) {
            return false;
        }
        let r = &sys.rows[sys.dual_rows[m]];
        if r.fine_patch() != k || r.fine_dof() != d {
            return false;
        }
    }
    rows.len() == sys.num_dual()
}

/// Greedy distinct-support matching of vertices on one edge: returns false
/// if two vertices would have to share the only supporting basis function.
pub fn schoenberg_whitney_edge(kv: &KnotVector, params: &[f64], available: &dyn Fn(usize) -> bool) -> bool {
    let mut ts: Vec<f64> = params.to_vec();
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut used = BTreeSet::new();
    for t in ts {
        let cands: Vec<usize> = supported(kv, t).into_iter().map(|(j, _)| j).filter(|&j| available(j)).collect();
        if cands.is_empty() {
            continue;
        }
        match cands.into_iter().find(|j| !used.contains(j)) {
            Some(j) => {
                used.insert(j);
            }
            None => return false,
        }
    }
    true
}

/// Result of the Schoenberg–Whitney check on one patch edge.
#[derive(Debug, Clone, PartialEq)]
pub struct SchoenbergWhitneyReport {
    pub edge: EdgeRef,
    pub passed: bool,
}

/// Checks every patch edge that carries a T-junction vertex.
pub fn check_schoenberg_whitney(topo: &MultiPatchTopology, layouts: &[DofLayout]) -> Vec<SchoenbergWhitneyReport> {
    let mut out = Vec::new();
    for k in 0..topo.num_patches() {
        for side in Side::ALL {
            let mut params = Vec::new();
            for v in &topo.vertices {
                for inc in &v.incidences {
                    if let VertexIncidence::EdgeInterior { patch, side: s, t } = *inc {
                        if patch == k && s == side {
                            params.push(t);
                        }
                    }
                }
            }
            if params.is_empty() {
                continue;
            }
            params.push(0.0);
            params.push(1.0);
            let trace = layouts[k].edge_dofs(side);
            let kv = topo.patches[k].edge_knots(side);
            let passed = schoenberg_whitney_edge(kv, &params, &|j| trace[j].is_some());
            out.push(SchoenbergWhitneyReport { edge: EdgeRef { patch: k, side }, passed });
        }
    }
    out
}

/// Couplings whose refined side carries a strictly larger coefficient than
/// the coarse side.
pub fn check_consistency(topo: &MultiPatchTopology, couplings: &[InterfaceCoupling]) -> Vec<usize> {
    couplings
        .iter()
        .enumerate()
        .filter(|(_, c)| topo.patches[c.fine.patch].nu > topo.patches[c.coarse.patch].nu)
        .map(|(i, _)| i)
        .collect()
}

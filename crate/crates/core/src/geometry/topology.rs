use alloc::vec;
use alloc::vec::Vec;

use super::{corner_point, det, GeometryError, Patch, Point, Result, Side};
use crate::math::{hypot, round, sqrt};

/// Absolute tolerance used to identify coinciding physical points.
pub const DEFAULT_TOPOLOGY_TOL: f64 = 1e-9;

const SAMPLES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeRef {
    pub patch: usize,
    pub side: Side,
}

/// A shared segment. The whole `sub` edge coincides with the part
/// `host_range` of the `host` edge; for matching edges the range is [0, 1].
/// Host edge parameter `s = a + (b - a) t` for sub parameter `t`, with `t`
/// replaced by `1 - t` when `reversed`.
#[derive(Debug, Clone, PartialEq)]
pub struct Interface {
    pub sub: EdgeRef,
    pub host: EdgeRef,
    pub host_range: [f64; 2],
    pub reversed: bool,
}

impl Interface {
    pub fn is_matching(&self) -> bool {
        self.host_range == [0.0, 1.0]
    }

    /// Host edge parameter of sub edge parameter `t`.
    pub fn host_param(&self, t: f64) -> f64 {
        let u = if self.reversed { 1.0 - t } else { t };
        self.host_range[0] + (self.host_range[1] - self.host_range[0]) * u
    }

    /// Sub edge parameter of host edge parameter `s`.
    pub fn sub_param(&self, s: f64) -> f64 {
        let u = (s - self.host_range[0]) / (self.host_range[1] - self.host_range[0]);
        if self.reversed {
            1.0 - u
        } else {
            u
        }
    }

    pub fn patches(&self) -> [usize; 2] {
        [self.sub.patch, self.host.patch]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VertexIncidence {
    Corner { patch: usize, corner: usize },
    /// The vertex lies inside edge `side` of `patch` at edge parameter `t` (T-junction).
    EdgeInterior { patch: usize, side: Side, t: f64 },
}

impl VertexIncidence {
    pub fn patch(&self) -> usize {
        match *self {
            VertexIncidence::Corner { patch, .. } | VertexIncidence::EdgeInterior { patch, .. } => patch,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub point: Point,
    pub incidences: Vec<VertexIncidence>,
}

impl Vertex {
    pub fn is_t_junction(&self) -> bool {
        self.incidences.iter().any(|i| matches!(i, VertexIncidence::EdgeInterior { .. }))
    }
}

#[derive(Debug, Clone)]
pub struct MultiPatchTopology {
    pub patches: Vec<Patch>,
    pub interfaces: Vec<Interface>,
    pub vertices: Vec<Vertex>,
    /// Dirichlet flag per patch and side (indexed by `Side::index`).
    pub dirichlet: Vec<[bool; 4]>,
}

impl MultiPatchTopology {
    pub fn num_patches(&self) -> usize {
        self.patches.len()
    }

    /// Interfaces touching patch `k`, as indices into `interfaces`.
    pub fn interfaces_of(&self, k: usize) -> Vec<usize> {
        (0..self.interfaces.len()).filter(|&i| self.interfaces[i].patches().contains(&k)).collect()
    }

    /// Neighbour patches sharing an interface with `k`.
    pub fn neighbours(&self, k: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .interfaces_of(k)
            .into_iter()
            .map(|i| {
                let [a, b] = self.interfaces[i].patches();
                if a == k {
                    b
                } else {
                    a
                }
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

struct EdgeGeom {
    samples: Vec<Point>,
    lo: Point,
    hi: Point,
}

fn edge_geom(patch: &Patch, side: Side) -> EdgeGeom {
    let n = 32;
    let samples: Vec<Point> = (0..=n)
        .map(|s| patch.geometry.eval(side.point(s as f64 / n as f64)).expect("in domain"))
        .collect();
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in &samples {
        for r in 0..2 {
            lo[r] = lo[r].min(p[r]);
            hi[r] = hi[r].max(p[r]);
        }
    }
    // Curved edges can bulge between samples.
    let pad = 0.01 * hypot(hi[0] - lo[0], hi[1] - lo[1]);
    EdgeGeom { samples, lo: [lo[0] - pad, lo[1] - pad], hi: [hi[0] + pad, hi[1] + pad] }
}

fn dist(a: Point, b: Point) -> f64 {
    hypot(a[0] - b[0], a[1] - b[1])
}

/// Closest edge parameter to `x` and the distance.
fn project(patch: &Patch, side: Side, geom: &EdgeGeom, x: Point) -> (f64, f64) {
    let n = geom.samples.len() - 1;
    let mut best = 0;
    for (i, p) in geom.samples.iter().enumerate() {
        if dist(*p, x) < dist(geom.samples[best], x) {
            best = i;
        }
    }
    let eval = |t: f64| dist(patch.geometry.eval(side.point(t)).expect("in domain"), x);
    let mut a = (best.saturating_sub(1)) as f64 / n as f64;
    let mut b = ((best + 1).min(n)) as f64 / n as f64;
    let g = (sqrt(5.0) - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (eval(c), eval(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = eval(d);
        }
    }
    let mut t = 0.5 * (a + b);
    let mut f = eval(t);
    for cand in [0.0, 1.0] {
        let fc = eval(cand);
        if fc < f {
            f = fc;
            t = cand;
        }
    }
    (t, f)
}

/// Snaps parameters to nearby dyadic fractions.
fn snap(t: f64, tol: f64) -> f64 {
    let scale = (1u64 << 30) as f64;
    let r = round(t * scale) / scale;
    if (r - t).abs() <= tol {
        r
    } else {
        t
    }
}

fn boxes_overlap(a: &EdgeGeom, b: &EdgeGeom, tol: f64) -> bool {
    a.lo[0] <= b.hi[0] + tol && b.lo[0] <= a.hi[0] + tol && a.lo[1] <= b.hi[1] + tol && b.lo[1] <= a.hi[1] + tol
}

/// Sample parameters of an edge.
fn sample_params() -> [f64; SAMPLES] {
    [0.0, 0.25, 0.5, 0.75, 1.0]
}

/// Builds interfaces, vertices and Dirichlet tags. Patches are reordered
/// canonically by the physical location of their centres.
pub fn build_topology(mut patches: Vec<Patch>, tol: f64) -> Result<MultiPatchTopology> {
    for p in &patches {
        for &xi in &[[0.5, 0.5], [0.0, 0.0], [1.0, 1.0]] {
            let j = p.geometry.jacobian(xi)?;
            if !(det(&j).abs() > 0.0) {
                return Err(GeometryError::InvalidGeometry("degenerate Jacobian"));
            }
        }
    }
    let key = |p: &Patch| {
        let c = p.geometry.eval([0.5, 0.5]).expect("in domain");
        let q = |v: f64| round(v / (100.0 * tol)) as i64;
        let a = p.geometry.eval([0.0, 0.0]).expect("in domain");
        (q(c[1]), q(c[0]), q(a[1]), q(a[0]))
    };
    patches.sort_by_cached_key(key);
    let n = patches.len();
    let geoms: Vec<[EdgeGeom; 4]> = patches
        .iter()
        .map(|p| [edge_geom(p, Side::South), edge_geom(p, Side::East), edge_geom(p, Side::North), edge_geom(p, Side::West)])
        .collect();

    let mut interfaces = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for si in Side::ALL {
                for sj in Side::ALL {
                    let (gi, gj) = (&geoms[i][si.index()], &geoms[j][sj.index()]);
                    if !boxes_overlap(gi, gj, tol) {
                        continue;
                    }
                    let ei = EdgeRef { patch: i, side: si };
                    let ej = EdgeRef { patch: j, side: sj };
                    if let Some(iface) = classify_pair(&patches, &geoms, ei, ej, tol)? {
                        interfaces.push(iface);
                    }
                }
            }
        }
    }
    interfaces.sort_by_key(|a| (a.sub, a.host));

    // Dirichlet tags from interface coverage.
    let mut dirichlet = vec![[false; 4]; n];
    for k in 0..n {
        for side in Side::ALL {
            let mut ranges: Vec<[f64; 2]> = Vec::new();
            for f in &interfaces {
                if f.sub == (EdgeRef { patch: k, side }) {
                    ranges.push([0.0, 1.0]);
                }
                if f.host == (EdgeRef { patch: k, side }) {
                    ranges.push(f.host_range);
                }
            }
            if ranges.is_empty() {
                dirichlet[k][side.index()] = true;
                continue;
            }
            ranges.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
            let mut reach = 0.0f64;
            for r in &ranges {
                if r[0] > reach + 1e-9 {
                    return Err(GeometryError::NonAdmissibleDecomposition("edge only partially covered by interfaces"));
                }
                reach = reach.max(r[1]);
            }
            if reach < 1.0 - 1e-9 {
                return Err(GeometryError::NonAdmissibleDecomposition("edge only partially covered by interfaces"));
            }
        }
    }

    // Vertices: deduplicated corners plus T-junction incidences.
    let mut corners: Vec<(Point, usize, usize)> = Vec::with_capacity(4 * n);
    for (k, p) in patches.iter().enumerate() {
        for c in 0..4 {
            corners.push((p.geometry.eval(corner_point(c))?, k, c));
        }
    }
    let mut vertices: Vec<Vertex> = Vec::new();
    for (pt, k, c) in corners {
        match vertices.iter_mut().find(|v| dist(v.point, pt) <= tol) {
            Some(v) => v.incidences.push(VertexIncidence::Corner { patch: k, corner: c }),
            None => vertices.push(Vertex { point: pt, incidences: vec![VertexIncidence::Corner { patch: k, corner: c }] }),
        }
    }
    for v in vertices.iter_mut() {
        for k in 0..n {
            if v.incidences.iter().any(|i| i.patch() == k) {
                continue;
            }
            for side in Side::ALL {
                let g = &geoms[k][side.index()];
                if v.point[0] < g.lo[0] - tol || v.point[0] > g.hi[0] + tol || v.point[1] < g.lo[1] - tol || v.point[1] > g.hi[1] + tol {
                    continue;
                }
                let (t, d) = project(&patches[k], side, g, v.point);
                if d <= tol && t > 1e-9 && t < 1.0 - 1e-9 {
                    v.incidences.push(VertexIncidence::EdgeInterior { patch: k, side, t: snap(t, 1e-9) });
                }
            }
        }
    }
    vertices.sort_by_cached_key(|v| {
        let q = |x: f64| round(x / (100.0 * tol)) as i64;
        (q(v.point[1]), q(v.point[0]))
    });
    Ok(MultiPatchTopology { patches, interfaces, vertices, dirichlet })
}

fn classify_pair(
    patches: &[Patch],
    geoms: &[[EdgeGeom; 4]],
    e1: EdgeRef,
    e2: EdgeRef,
    tol: f64,
) -> Result<Option<Interface>> {
    let pt = |e: EdgeRef, t: f64| patches[e.patch].geometry.eval(e.side.point(t)).expect("in domain");
    let proj = |onto: EdgeRef, x: Point| project(&patches[onto.patch], onto.side, &geoms[onto.patch][onto.side.index()], x);
    let on = |from: EdgeRef, onto: EdgeRef| -> [Option<f64>; SAMPLES] {
        let mut out = [None; SAMPLES];
        for (k, t) in sample_params().iter().enumerate() {
            let (s, d) = proj(onto, pt(from, *t));
            if d <= tol {
                out[k] = Some(s);
            }
        }
        out
    };
    let a = on(e1, e2);
    let b = on(e2, e1);
    let full = |v: &[Option<f64>; SAMPLES]| v.iter().all(|x| x.is_some());
    let inside = |x: &Option<f64>| matches!(x, Some(s) if *s > 1e-9 && *s < 1.0 - 1e-9);
    let interior = |v: &[Option<f64>; SAMPLES]| v[1..SAMPLES - 1].iter().any(inside);
    let end_inside = |v: &[Option<f64>; SAMPLES]| inside(&v[0]) || inside(&v[SAMPLES - 1]);
    let (sub, host, params) = if full(&a) {
        (e1, e2, a)
    } else if full(&b) {
        (e2, e1, b)
    } else if interior(&a) || interior(&b) || (end_inside(&a) && end_inside(&b)) {
        return Err(GeometryError::NonAdmissibleDecomposition("two edges overlap partially"));
    } else {
        return Ok(None);
    };
    let s: Vec<f64> = params.iter().map(|x| snap(x.unwrap(), 1e-9)).collect();
    let (s0, s1) = (s[0], s[SAMPLES - 1]);
    if (s1 - s0).abs() < 1e-9 {
        return Err(GeometryError::NonAdmissibleDecomposition("degenerate interface"));
    }
    for (k, t) in sample_params().iter().enumerate() {
        if (s[k] - (s0 + (s1 - s0) * t)).abs() > 1e-7 {
            return Err(GeometryError::NonAdmissibleDecomposition("interface parametrizations are not affinely related"));
        }
    }
    let reversed = s1 < s0;
    let host_range = if reversed { [s1, s0] } else { [s0, s1] };
    let matching = host_range[0].abs() < 1e-9 && (host_range[1] - 1.0).abs() < 1e-9;
    let iface = if matching {
        // Canonical: the lower patch index is the sub edge.
        let (sub, host) = if sub.patch < host.patch { (sub, host) } else { (host, sub) };
        Interface { sub, host, host_range: [0.0, 1.0], reversed }
    } else {
        Interface { sub, host, host_range, reversed }
    };
    Ok(Some(iface))
}

/// Sampled geometric constants of one patch.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchAssumptions {
    /// `sqrt(sup |grad G| * sup |grad G^{-1}|)`, the smallest constant valid for some patch scale.
    pub c_g: f64,
    /// `h_hat_min / h_hat` over both directions.
    pub c_q: f64,
    /// Jacobian determinant keeps one sign on the sample grid.
    pub orientation_consistent: bool,
    pub diameter: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub patches: Vec<PatchAssumptions>,
    /// Every interface is a full edge of at least one patch (holds for any built topology).
    pub admissible: bool,
    /// Each T-junction vertex lies inside exactly one neighbour edge.
    pub t_junctions_simple: bool,
}

/// Samples the geometry constants on a 20x20 grid.
pub fn check_assumptions(topo: &MultiPatchTopology) -> AssumptionReport {
    let grid = 20;
    let patches = topo
        .patches
        .iter()
        .map(|p| {
            let mut gmax: f64 = 0.0;
            let mut ginv: f64 = 0.0;
            let mut pos = 0;
            let mut neg = 0;
            for j in 0..grid {
                for i in 0..grid {
                    let xi = [(i as f64 + 0.5) / grid as f64, (j as f64 + 0.5) / grid as f64];
                    let jac = p.geometry.jacobian(xi).expect("in domain");
                    let (smax, smin) = crate::math::singular_values2x2(jac);
                    gmax = gmax.max(smax);
                    ginv = ginv.max(if smin > 0.0 { 1.0 / smin } else { f64::INFINITY });
                    if det(&jac) > 0.0 {
                        pos += 1;
                    } else {
                        neg += 1;
                    }
                }
            }
            let c_q = (0..2).map(|d| p.knots[d].h_hat_min() / p.knots[d].h_hat()).fold(f64::INFINITY, f64::min);
            PatchAssumptions { c_g: sqrt(gmax * ginv), c_q, orientation_consistent: pos == 0 || neg == 0, diameter: p.diameter() }
        })
        .collect();
    let t_junctions_simple = topo.vertices.iter().all(|v| {
        v.incidences.iter().filter(|i| matches!(i, VertexIncidence::EdgeInterior { .. })).count() <= 1
    });
    AssumptionReport { patches, admissible: true, t_junctions_simple }
}

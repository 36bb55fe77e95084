//! One-dimensional B-spline bases on open knot vectors and knot insertion.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::linalg::DenseMatrix;

/// Tolerance for knot comparisons.
pub const KNOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SplineError {
    #[error("invalid knot vector: {0}")]
    InvalidKnotVector(&'static str),
    #[error("parameter {0} outside [0, 1]")]
    OutOfDomain(f64),
    #[error("coarse knot multiset is not contained in the fine one")]
    NotNested,
    #[error("degrees differ ({0} vs {1})")]
    DegreeMismatch(usize, usize),
    #[error("invalid subinterval [{a}, {b}]")]
    InvalidSubinterval { a: f64, b: f64 },
}

pub type Result<T> = core::result::Result<T, SplineError>;

/// Degree plus a p-open knot sequence on [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    degree: usize,
    knots: Vec<f64>,
}

impl KnotVector {
    pub fn new(degree: usize, mut knots: Vec<f64>) -> Result<Self> {
        if degree == 0 {
            return Err(SplineError::InvalidKnotVector("degree must be at least 1"));
        }
        let p = degree;
        if knots.len() < 2 * (p + 1) {
            return Err(SplineError::InvalidKnotVector("too few knots"));
        }
        if knots.iter().any(|k| !k.is_finite()) {
            return Err(SplineError::InvalidKnotVector("non-finite knot"));
        }
        if knots.windows(2).any(|w| w[1] < w[0]) {
            return Err(SplineError::InvalidKnotVector("knots decrease"));
        }
        let m = knots.len();
        for i in 0..=p {
            if knots[i].abs() > KNOT_TOL || (knots[m - 1 - i] - 1.0).abs() > KNOT_TOL {
                return Err(SplineError::InvalidKnotVector("knot vector is not p-open on [0, 1]"));
            }
            knots[i] = 0.0;
            knots[m - 1 - i] = 1.0;
        }
        for i in 1..m - p - 1 {
            if knots[i + p] - knots[i] <= KNOT_TOL {
                return Err(SplineError::InvalidKnotVector("interior knot multiplicity exceeds p"));
            }
        }
        Ok(Self { degree, knots })
    }

    /// Uniform open knot vector with `elements` equal spans.
    pub fn uniform(degree: usize, elements: usize) -> Self {
        let mut knots = vec![0.0; degree + 1];
        for i in 1..elements {
            knots.push(i as f64 / elements as f64);
        }
        knots.extend(core::iter::repeat_n(1.0, degree + 1));
        Self::new(degree, knots).expect("uniform knot vector is valid")
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn num_basis(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    /// Distinct knot values in increasing order.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for &k in &self.knots {
            if out.last().is_none_or(|&l| k - l > KNOT_TOL) {
                out.push(k);
            }
        }
        out
    }

    pub fn num_elements(&self) -> usize {
        self.breakpoints().len() - 1
    }

    /// Largest knot span (grid size).
    pub fn h_hat(&self) -> f64 {
        self.breakpoints().windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Smallest nonzero knot span.
    pub fn h_hat_min(&self) -> f64 {
        self.breakpoints().windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    pub fn multiplicity(&self, x: f64) -> usize {
        self.knots.iter().filter(|&&k| (k - x).abs() <= KNOT_TOL).count()
    }

    /// Knot span index `mu` with `knots[mu] <= x < knots[mu + 1]`; the last
    /// nonempty span is used at `x = 1`.
    pub fn find_span(&self, x: f64) -> Result<usize> {
        if !(-KNOT_TOL..=1.0 + KNOT_TOL).contains(&x) || x.is_nan() {
            return Err(SplineError::OutOfDomain(x));
        }
        let p = self.degree;
        let n = self.num_basis();
        if x >= self.knots[n] {
            return Ok(n - 1);
        }
        if x <= self.knots[p] {
            return Ok(p);
        }
        let (mut lo, mut hi) = (p, n);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if x < self.knots[mid] {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(lo)
    }

    /// Index of the first nonzero basis function and the `p + 1` values.
    pub fn eval_basis(&self, x: f64) -> Result<(usize, Vec<f64>)> {
        let span = self.find_span(x)?;
        let x = x.clamp(0.0, 1.0);
        Ok((span - self.degree, self.basis_funs(span, x)))
    }

    fn basis_funs(&self, span: usize, x: f64) -> Vec<f64> {
        let p = self.degree;
        let u = &self.knots;
        let mut n = vec![0.0; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        n[0] = 1.0;
        for j in 1..=p {
            left[j] = x - u[span + 1 - j];
            right[j] = u[span + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let temp = n[r] / (right[r + 1] + left[j - r]);
                n[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            n[j] = saved;
        }
        n
    }

    /// Derivatives up to `order` of the `p + 1` nonzero basis functions:
    /// `ders[k][j]` is the k-th derivative of function `first + j`.
    pub fn eval_derivs(&self, x: f64, order: usize) -> Result<(usize, Vec<Vec<f64>>)> {
        let span = self.find_span(x)?;
        let x = x.clamp(0.0, 1.0);
        let p = self.degree;
        let u = &self.knots;
        let mut ndu = vec![vec![0.0; p + 1]; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        ndu[0][0] = 1.0;
        for j in 1..=p {
            left[j] = x - u[span + 1 - j];
            right[j] = u[span + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }
        let mut ders = vec![vec![0.0; p + 1]; order + 1];
        for j in 0..=p {
            ders[0][j] = ndu[j][p];
        }
        let nd = order.min(p);
        let mut a = vec![vec![0.0; p + 1]; 2];
        for r in 0..=p {
            let (mut s1, mut s2) = (0usize, 1usize);
            a[0][0] = 1.0;
            for k in 1..=nd {
                let mut d = 0.0;
                let rk = r as isize - k as isize;
                let pk = p - k;
                if r >= k {
                    a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                    d = a[s2][0] * ndu[rk as usize][pk];
                }
                let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
                let j2 = if (r as isize - 1) <= pk as isize { k - 1 } else { p - r };
                for j in j1..=j2 {
                    let idx = (rk + j as isize) as usize;
                    a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                    d += a[s2][j] * ndu[idx][pk];
                }
                if r <= pk {
                    a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                    d += a[s2][k] * ndu[r][pk];
                }
                ders[k][r] = d;
                core::mem::swap(&mut s1, &mut s2);
            }
        }
        let mut fac = p as f64;
        for k in 1..=nd {
            for v in ders[k].iter_mut() {
                *v *= fac;
            }
            fac *= (p - k) as f64;
        }
        Ok((span - p, ders))
    }

    /// Evaluates the spline with coefficients `c` at `x`.
    pub fn eval_spline(&self, c: &[f64], x: f64) -> Result<f64> {
        let (first, vals) = self.eval_basis(x)?;
        Ok(vals.iter().enumerate().map(|(j, v)| v * c[first + j]).sum())
    }

    /// Inserts the midpoint of every nonempty knot span once.
    pub fn dyadic_refine(&self) -> Self {
        let bp = self.breakpoints();
        let mut extra: Vec<f64> = bp.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        extra.extend_from_slice(&self.knots);
        extra.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Self::new(self.degree, extra).expect("refinement keeps validity")
    }

    /// Knot averages.
    pub fn greville(&self) -> Vec<f64> {
        let p = self.degree;
        (0..self.num_basis())
            .map(|i| self.knots[i + 1..=i + p].iter().sum::<f64>() / p as f64)
            .collect()
    }

    /// Restriction to `[a, b]` (which must be breakpoints) rescaled to [0, 1].
    pub fn restrict(&self, a: f64, b: f64) -> Result<Self> {
        let is_break = |x: f64| self.multiplicity(x) > 0;
        if !(a < b) || !is_break(a) || !is_break(b) {
            return Err(SplineError::InvalidSubinterval { a, b });
        }
        Ok(self.restrict_with_matrix(a, b)?.0)
    }

    /// Restriction of the spline space to an arbitrary `[a, b]`, rescaled to
    /// [0, 1], together with the matrix mapping coefficients of `self` to
    /// coefficients of the restricted representation.
    pub fn restrict_with_matrix(&self, a: f64, b: f64) -> Result<(Self, DenseMatrix)> {
        if !(0.0..1.0).contains(&a) || !(a < b) || b > 1.0 + KNOT_TOL {
            return Err(SplineError::InvalidSubinterval { a, b });
        }
        let b = b.min(1.0);
        let p = self.degree;
        let mut kv = self.clone();
        let mut e = DenseMatrix::identity(self.num_basis());
        for x in [a, b] {
            if x <= KNOT_TOL || x >= 1.0 - KNOT_TOL {
                continue;
            }
            let x = snap(&kv.knots, x);
            while kv.multiplicity(x) < p {
                let (next, t) = kv.insert_single(x);
                e = t.matmul(&e).expect("shapes agree");
                kv = next;
            }
        }
        let a_s = snap(&kv.knots, a);
        let b_s = snap(&kv.knots, b);
        let start = if a_s <= 0.0 { 0 } else { kv.knots.iter().position(|&k| k == a_s).unwrap() - 1 };
        let end = if b_s >= 1.0 {
            kv.num_basis() - 1
        } else {
            kv.knots.iter().rposition(|&k| k == b_s).unwrap() - p
        };
        let mut knots = vec![0.0; p + 1];
        for &k in &kv.knots {
            if k > a_s + KNOT_TOL && k < b_s - KNOT_TOL {
                knots.push((k - a_s) / (b_s - a_s));
            }
        }
        knots.extend(core::iter::repeat_n(1.0, p + 1));
        let sub = Self::new(p, knots)?;
        debug_assert_eq!(sub.num_basis(), end - start + 1);
        let rows: Vec<usize> = (start..=end).collect();
        let cols: Vec<usize> = (0..self.num_basis()).collect();
        Ok((sub, e.select(&rows, &cols)))
    }

    /// Mirror image under `x -> 1 - x`.
    pub fn reversed(&self) -> Self {
        let knots = self.knots.iter().rev().map(|k| 1.0 - k).collect();
        Self::new(self.degree, knots).expect("mirror keeps validity")
    }

    /// True if the knot multiset of `other` is contained in that of `self`.
    pub fn contains(&self, other: &Self) -> bool {
        self.degree == other.degree && multiset_difference(&self.knots, &other.knots).is_some()
    }

    /// Boehm single knot insertion; returns the new vector and the
    /// `(n + 1) x n` coefficient map.
    fn insert_single(&self, x: f64) -> (Self, DenseMatrix) {
        let p = self.degree;
        let n = self.num_basis();
        let u = &self.knots;
        let k = self.find_span(x).expect("interior knot");
        let mut t = DenseMatrix::zeros(n + 1, n);
        for i in 0..=n {
            let alpha = if i + p <= k {
                1.0
            } else if i > k {
                0.0
            } else {
                (x - u[i]) / (u[i + p] - u[i])
            };
            if i < n {
                t[(i, i)] = alpha;
            }
            if i >= 1 {
                t[(i, i - 1)] = 1.0 - alpha;
            }
        }
        let mut knots = u.clone();
        knots.insert(k + 1, x);
        (Self { degree: p, knots }, t)
    }
}

fn snap(knots: &[f64], x: f64) -> f64 {
    knots.iter().copied().find(|k| (k - x).abs() <= KNOT_TOL).unwrap_or(x)
}

/// Knots of `fine` not matched by `coarse`, or `None` if `coarse` is not a sub-multiset.
fn multiset_difference(fine: &[f64], coarse: &[f64]) -> Option<Vec<f64>> {
    let mut extra = Vec::new();
    let mut j = 0;
    for &f in fine {
        if j < coarse.len() && (coarse[j] - f).abs() <= KNOT_TOL {
            j += 1;
        } else if j < coarse.len() && coarse[j] < f {
            return None;
        } else {
            extra.push(f);
        }
    }
    if j == coarse.len() {
        Some(extra)
    } else {
        None
    }
}

/// Nonnegative coarse-to-fine coefficient map, `n_fine x n_coarse`:
/// `coarse_j = sum_i E[i][j] fine_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    matrix: DenseMatrix,
}

impl EmbeddingMatrix {
    pub fn from_matrix(matrix: DenseMatrix) -> Self {
        Self { matrix }
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn n_fine(&self) -> usize {
        self.matrix.rows()
    }

    pub fn n_coarse(&self) -> usize {
        self.matrix.cols()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }
}

/// Embedding of the `coarse` spline space into the `fine` one by repeated
/// single knot insertion.
pub fn insert_knots(coarse: &KnotVector, fine: &KnotVector) -> Result<EmbeddingMatrix> {
    if coarse.degree != fine.degree {
        return Err(SplineError::DegreeMismatch(coarse.degree, fine.degree));
    }
    let extra = multiset_difference(&fine.knots, &coarse.knots).ok_or(SplineError::NotNested)?;
    let mut kv = coarse.clone();
    let mut e = DenseMatrix::identity(coarse.num_basis());
    for x in extra {
        let (next, t) = kv.insert_single(x);
        e = t.matmul(&e).expect("shapes agree");
        kv = next;
    }
    for v in e.as_mut_slice() {
        if v.abs() < 1e-15 {
            *v = 0.0;
        }
    }
    Ok(EmbeddingMatrix { matrix: e })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kv(p: usize, k: &[f64]) -> KnotVector {
        KnotVector::new(p, k.to_vec()).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn basis_examples() {
        let (_, v) = kv(1, &[0.0, 0.0, 1.0, 1.0]).eval_basis(0.5).unwrap();
        assert!(close(&v, &[0.5, 0.5], 1e-15));
        let k2 = kv(2, &[0.0, 0.0, 0.0, 0.5, 1.0, 1.0, 1.0]);
        let (f, v) = k2.eval_basis(0.25).unwrap();
        assert_eq!(f, 0);
        assert!(close(&v, &[0.25, 0.625, 0.125], 1e-15));
        let (f, v) = k2.eval_basis(0.0).unwrap();
        assert_eq!(f, 0);
        assert_eq!(v[0], 1.0);
        assert!(matches!(k2.eval_basis(1.5), Err(SplineError::OutOfDomain(_))));
    }

    #[test]
    fn derivative_examples() {
        let (_, d) = kv(1, &[0.0, 0.0, 1.0, 1.0]).eval_derivs(0.5, 1).unwrap();
        assert!(close(&d[1], &[-1.0, 1.0], 1e-15));
        let (_, d) = kv(2, &[0.0, 0.0, 0.0, 1.0, 1.0, 1.0]).eval_derivs(0.5, 1).unwrap();
        assert!(close(&d[1], &[-1.0, 0.0, 1.0], 1e-15));
    }

    #[test]
    fn insertion_examples() {
        let e = insert_knots(&kv(1, &[0.0, 0.0, 1.0, 1.0]), &kv(1, &[0.0, 0.0, 0.5, 1.0, 1.0])).unwrap();
        assert_eq!(e.matrix().as_slice(), &[1.0, 0.0, 0.5, 0.5, 0.0, 1.0]);
        let c = kv(2, &[0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let e = insert_knots(&c, &c).unwrap();
        assert_eq!(e.matrix(), &DenseMatrix::identity(3));
        let e = insert_knots(&c, &kv(2, &[0.0, 0.0, 0.0, 0.5, 1.0, 1.0, 1.0])).unwrap();
        assert!(close(
            e.matrix().as_slice(),
            &[1.0, 0.0, 0.0, 0.5, 0.5, 0.0, 0.0, 0.5, 0.5, 0.0, 0.0, 1.0],
            1e-15
        ));
        let r = insert_knots(&kv(1, &[0.0, 0.0, 0.5, 1.0, 1.0]), &kv(1, &[0.0, 0.0, 0.25, 1.0, 1.0]));
        assert_eq!(r, Err(SplineError::NotNested));
    }

    #[test]
    fn refine_greville_restrict() {
        assert_eq!(kv(1, &[0.0, 0.0, 1.0, 1.0]).dyadic_refine().knots(), &[0.0, 0.0, 0.5, 1.0, 1.0]);
        let g = kv(2, &[0.0, 0.0, 0.0, 0.5, 1.0, 1.0, 1.0]).greville();
        assert!(close(&g, &[0.0, 0.25, 0.75, 1.0], 1e-15));
        let r = kv(1, &[0.0, 0.0, 0.5, 1.0, 1.0]).restrict(0.0, 0.5).unwrap();
        assert_eq!(r.knots(), &[0.0, 0.0, 1.0, 1.0]);
        assert!(kv(1, &[0.0, 0.0, 0.5, 1.0, 1.0]).restrict(0.0, 0.3).is_err());
    }

    #[test]
    fn restriction_matrix_reproduces_values() {
        let k = KnotVector::uniform(3, 3);
        let c: Vec<f64> = (0..k.num_basis()).map(|i| (i as f64 * 0.7).sin()).collect();
        for &(a, b) in &[(0.0, 0.5), (0.2, 0.9), (0.5, 1.0), (1.0 / 3.0, 2.0 / 3.0)] {
            let (sub, m) = k.restrict_with_matrix(a, b).unwrap();
            let cs = m.matvec(&c).unwrap();
            for s in 0..=20 {
                let t = s as f64 / 20.0;
                let x = a + (b - a) * t;
                let v1 = k.eval_spline(&c, x).unwrap();
                let v2 = sub.eval_spline(&cs, t).unwrap();
                assert!((v1 - v2).abs() < 1e-12, "{a} {b} {t}: {v1} vs {v2}");
            }
        }
    }

    #[test]
    fn validation() {
        assert!(KnotVector::new(2, vec![0.0, 0.0, 1.0, 1.0]).is_err());
        assert!(KnotVector::new(1, vec![0.0, 0.0, 0.5, 0.5, 1.0, 1.0]).is_err());
        assert!(KnotVector::new(1, vec![0.0, 0.0, 0.7, 0.5, 1.0, 1.0]).is_err());
        assert!(KnotVector::new(2, vec![0.0, 0.0, 0.0, 0.5, 0.5, 1.0, 1.0, 1.0]).is_ok());
    }
}

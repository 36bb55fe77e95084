//! Preconditioned conjugate gradients with a Lanczos condition estimate.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::linalg::{axpy, dot, symmetric_tridiagonal_extremes};
use crate::math::sqrt;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KrylovError {
    #[error("no convergence within {} iterations", .report.iterations)]
    MaxIterationsExceeded { solution: Vec<f64>, report: Box<SolveReport> },
    #[error("operator not positive definite: p^T F p = {value:e} in iteration {iteration}")]
    IndefiniteOperatorDetected { iteration: usize, value: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

pub type Result<T> = core::result::Result<T, KrylovError>;

/// Outcome of one PCG run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveReport {
    pub iterations: usize,
    /// `sqrt(r^T M r)` relative to its initial value, one entry per iterate
    /// starting with `1`.
    pub residuals: Vec<f64>,
    /// Step lengths `alpha_j`.
    pub alphas: Vec<f64>,
    /// Direction updates `beta_j`.
    pub betas: Vec<f64>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub condition: f64,
}

impl SolveReport {
    /// Condition estimates after every iteration.
    pub fn condition_history(&self) -> Vec<f64> {
        (1..=self.alphas.len()).map(|k| estimate_condition(&self.alphas[..k], &self.betas[..k - 1]).2).collect()
    }
}

/// Lanczos tridiagonal of the CG coefficients: diagonal `1/a_1`,
/// `1/a_j + b_{j-1}/a_{j-1}`, off-diagonal `sqrt(b_j)/a_j`.
pub fn lanczos_tridiagonal(alphas: &[f64], betas: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let k = alphas.len();
    let mut d = Vec::with_capacity(k);
    let mut e = Vec::with_capacity(k.saturating_sub(1));
    for j in 0..k {
        let mut v = 1.0 / alphas[j];
        if j > 0 {
            v += betas[j - 1] / alphas[j - 1];
        }
        d.push(v);
        if j + 1 < k {
            e.push(sqrt(betas[j].max(0.0)) / alphas[j]);
        }
    }
    (d, e)
}

/// Extreme Ritz values and their ratio, from at least one CG step.
pub fn estimate_condition(alphas: &[f64], betas: &[f64]) -> (f64, f64, f64) {
    if alphas.is_empty() {
        return (1.0, 1.0, 1.0);
    }
    let (d, e) = lanczos_tridiagonal(alphas, betas);
    let (lo, hi) = symmetric_tridiagonal_extremes(&d, &e);
    let kappa = if lo > 0.0 { (hi / lo).max(1.0) } else { f64::INFINITY };
    (lo, hi, kappa)
}

/// Solves `F x = d` from a zero initial guess. Stops once
/// `sqrt(r^T M r) <= rel_tol * sqrt(r_0^T M r_0)`.
pub fn pcg<A, M>(mut apply_op: A, mut apply_precond: M, d: &[f64], rel_tol: f64, max_iter: usize) -> Result<(Vec<f64>, SolveReport)>
where
    A: FnMut(&[f64]) -> Vec<f64>,
    M: FnMut(&[f64]) -> Vec<f64>,
{
    let n = d.len();
    let mut x = vec![0.0; n];
    let mut report = SolveReport { residuals: vec![1.0], lambda_min: 1.0, lambda_max: 1.0, condition: 1.0, ..Default::default() };
    if d.iter().all(|&v| v == 0.0) {
        return Ok((x, report));
    }
    let mut r = d.to_vec();
    let mut z = apply_precond(&r);
    check(n, z.len())?;
    let mut rho = dot(&r, &z);
    let rho0 = rho;
    if rho0 <= 0.0 {
        return Err(KrylovError::IndefiniteOperatorDetected { iteration: 0, value: rho0 });
    }
    let mut p = z.clone();
    for it in 1..=max_iter {
        let q = apply_op(&p);
        check(n, q.len())?;
        let pq = dot(&p, &q);
        if pq <= 0.0 || !pq.is_finite() {
            return Err(KrylovError::IndefiniteOperatorDetected { iteration: it, value: pq });
        }
        let alpha = rho / pq;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &q, &mut r);
        z = apply_precond(&r);
        let rho_new = dot(&r, &z);
        let beta = rho_new / rho;
        report.alphas.push(alpha);
        report.iterations = it;
        report.residuals.push(sqrt((rho_new / rho0).max(0.0)));
        if sqrt((rho_new / rho0).max(0.0)) <= rel_tol {
            finish(&mut report);
            return Ok((x, report));
        }
        report.betas.push(beta);
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
        rho = rho_new;
    }
    finish(&mut report);
    Err(KrylovError::MaxIterationsExceeded { solution: x, report: Box::new(report) })
}

fn finish(report: &mut SolveReport) {
    let k = report.alphas.len();
    let (lo, hi, kappa) = estimate_condition(&report.alphas, &report.betas[..k.saturating_sub(1)]);
    report.lambda_min = lo;
    report.lambda_max = hi;
    report.condition = kappa;
}

fn check(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(KrylovError::DimensionMismatch { expected, found })
    }
}

//! Gauss–Legendre quadrature.

use alloc::vec::Vec;

use crate::math::cos;

/// Gauss–Legendre rule with `n` points on [0, 1]: (nodes, weights).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "quadrature needs at least one point");
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        // Newton iteration on P_n starting from the Chebyshev-like guess.
        let mut x = cos(core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        nodes.push(0.5 * (1.0 - x));
        weights.push(1.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

/// Legendre polynomial P_n and its derivative at x.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Tensor rule on the box `[a0, a1] x [b0, b1]`: points and weights.
pub fn tensor_rule(rule: &(Vec<f64>, Vec<f64>), a: [f64; 2], b: [f64; 2]) -> Vec<([f64; 2], f64)> {
    let (x, w) = rule;
    let mut out = Vec::with_capacity(x.len() * x.len());
    for (xj, wj) in x.iter().zip(w) {
        for (xi, wi) in x.iter().zip(w) {
            let p = [a[0] + (a[1] - a[0]) * xi, b[0] + (b[1] - b[0]) * xj];
            out.push((p, wi * wj * (a[1] - a[0]) * (b[1] - b[0])));
        }
    }
    out
}

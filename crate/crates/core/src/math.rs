//! Floating point helpers usable without `std`.

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn log10(x: f64) -> f64 {
    libm::log10(x)
}

#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub fn round(x: f64) -> f64 {
    libm::round(x)
}

#[inline]
pub fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}

#[inline]
pub fn powi(x: f64, n: i32) -> f64 {
    libm::pow(x, n as f64)
}

/// Spectral norm of a 2x2 matrix given row-major.
pub fn norm2x2(m: [[f64; 2]; 2]) -> f64 {
    let (smax, _) = singular_values2x2(m);
    smax
}

/// Largest and smallest singular values of a 2x2 matrix.
pub fn singular_values2x2(m: [[f64; 2]; 2]) -> (f64, f64) {
    let [[a, b], [c, d]] = m;
    let s1 = a * a + b * b + c * c + d * d;
    let det = a * d - b * c;
    let disc = sqrt((s1 * s1 - 4.0 * det * det).max(0.0));
    let smax = sqrt(0.5 * (s1 + disc));
    let smin = sqrt((0.5 * (s1 - disc)).max(0.0));
    (smax, smin)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singular_values_of_diagonal() {
        let (a, b) = singular_values2x2([[3.0, 0.0], [0.0, -2.0]]);
        assert!((a - 3.0).abs() < 1e-14);
        assert!((b - 2.0).abs() < 1e-14);
    }

    #[test]
    fn singular_values_of_rotation() {
        let t: f64 = 0.3;
        let (a, b) = singular_values2x2([[cos(t), -sin(t)], [sin(t), cos(t)]]);
        assert!((a - 1.0).abs() < 1e-14 && (b - 1.0).abs() < 1e-7);
    }
}

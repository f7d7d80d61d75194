//! Power-series Bessel functions for the small arguments of the kernel expansion.

use num_complex::Complex64;

const MAX_TERMS: usize = 200;

/// Bessel function of the first kind Jₙ(z) for complex z, by its ascending series.
///
/// Intended for |z| of order one or smaller; the series is summed until the
/// terms fall below machine precision relative to the partial sum.
pub fn bessel_j(n: u32, z: Complex64) -> Complex64 {
    let half = z * 0.5;
    let mut term = half.powu(n) / factorial(n);
    let mut sum = term;
    let q = -(half * half);
    for k in 1..MAX_TERMS {
        term = term * q / (k as f64 * (k as f64 + n as f64));
        sum += term;
        if term.norm() <= f64::EPSILON * sum.norm() {
            break;
        }
    }
    sum
}

/// Modified Bessel function Iₙ(x) for real x.
pub fn bessel_i(n: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = half.powi(n as i32) / factorial(n);
    let mut sum = term;
    let q = half * half;
    for k in 1..MAX_TERMS {
        term *= q / (k as f64 * (k as f64 + n as f64));
        sum += term;
        if term.abs() <= f64::EPSILON * sum.abs() {
            break;
        }
    }
    sum
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

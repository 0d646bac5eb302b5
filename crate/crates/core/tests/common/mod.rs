//! Closed forms shared by the test targets.

use std::f64::consts::PI;

/// `|S^{n-1}| = 2 π^{n/2} / Γ(n/2)`, by the half-integer recursion.
pub fn sphere_area(n: usize) -> f64 {
    let nf = n as f64;
    let mut gamma = if n % 2 == 0 { 1.0 } else { PI.sqrt() };
    let mut x = if n % 2 == 0 { 1.0 } else { 0.5 };
    while x < nf / 2.0 {
        gamma *= x;
        x += 1.0;
    }
    2.0 * PI.powf(nf / 2.0) / gamma
}

/// Quotient of the extremal `(1 + r^{2-s})^{-(n-2)/(2-s)}` for `p = 2`.
/// With `t = r^{2-s}` both integrals become Beta functions.
pub fn lieb_constant(n: usize, s: f64) -> f64 {
    let nf = n as f64;
    let beta = 2.0 - s;
    let k = (nf - 2.0) / beta;
    let a = (nf - s) / beta;
    let area = sphere_area(n);
    let grad = area * k * k * beta * statrs::function::beta::beta(k + 2.0, k);
    let den = area * statrs::function::beta::beta(a, a) / beta;
    grad / den.powf((nf - 2.0) / (nf - s))
}

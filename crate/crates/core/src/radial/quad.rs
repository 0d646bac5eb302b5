//! Adaptive Gauss–Kronrod quadrature, plus a radial driver that integrates in
//! the logarithmic variable `x = ln r` and closes the domain at the origin and
//! at infinity with power-law end pieces.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

// 15-point Kronrod abscissae and weights with the embedded 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances and limits for [`adaptive`].
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            rel_tol: 1e-11,
            abs_tol: 1e-300,
            max_intervals: 4000,
        }
    }
}

impl QuadOptions {
    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    /// Estimated absolute error.
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// One application of the 15-point Kronrod rule on `[a, b]`.
/// Returns `(integral, error estimate)` following the QUADPACK heuristic.
pub fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = (fc * WGK[7]).abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let integral = res_k * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (integral, err)
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

/// Globally adaptive quadrature over the partition given by `breaks`
/// (sorted, at least two points). Bisects the segment with the largest
/// error estimate until the total error meets the tolerance.
pub fn adaptive<F: Fn(f64) -> f64>(f: &F, breaks: &[f64], opts: QuadOptions) -> QuadResult {
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            let (value, error) = gauss_kronrod(f, w[0], w[1]);
            evaluations += 15;
            heap.push(Segment {
                a: w[0],
                b: w[1],
                value,
                error,
            });
        }
    }
    let mut converged = false;
    loop {
        let total: f64 = heap.iter().map(|s| s.value).sum();
        let err: f64 = heap.iter().map(|s| s.error).sum();
        if err <= opts.abs_tol.max(opts.rel_tol * total.abs()) || !err.is_finite() {
            converged = err.is_finite();
            break;
        }
        if heap.len() >= opts.max_intervals {
            break;
        }
        let worst = match heap.pop() {
            Some(s) => s,
            None => break,
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // cannot bisect further in floating point
            heap.push(worst);
            break;
        }
        for (a, b) in [(worst.a, mid), (mid, worst.b)] {
            let (value, error) = gauss_kronrod(f, a, b);
            evaluations += 15;
            heap.push(Segment { a, b, value, error });
        }
    }
    let mut segments = heap.into_vec();
    segments.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = segments.iter().map(|s| s.value).sum();
    let error = segments.iter().map(|s| s.error).sum();
    QuadResult {
        value,
        error,
        evaluations,
        converged,
    }
}

/// Relative distance from the outermost feature to the closing radius at the
/// origin and at infinity.
const HEAD_SPAN: f64 = 1e-14;
const TAIL_SPAN: f64 = 1e60;

/// Radial integration domain `[inner, outer]`; `inner == 0` means the origin,
/// `outer == inf` means the half line. `features` are radii where the
/// integrand changes character and are used as breakpoints.
#[derive(Debug, Clone)]
pub struct RadialDomain {
    pub inner: f64,
    pub outer: f64,
    pub features: Vec<f64>,
}

impl RadialDomain {
    pub fn new(inner: f64, outer: f64, features: impl IntoIterator<Item = f64>) -> Self {
        RadialDomain {
            inner,
            outer,
            features: features.into_iter().collect(),
        }
    }
}

/// Local power-law exponent of `g` between `r1 < r2`.
fn local_exponent<G: Fn(f64) -> f64>(g: &G, r1: f64, r2: f64) -> Option<(f64, f64)> {
    let g1 = g(r1);
    let g2 = g(r2);
    if g1 == 0.0 || g2 == 0.0 || g1.signum() != g2.signum() {
        return None;
    }
    Some(((g2 / g1).ln() / (r2 / r1).ln(), g2))
}

/// Integrates `g(r) dr` over a radial domain. The bulk is integrated in
/// `x = ln r`; below `HEAD_SPAN` times the smallest feature and above
/// `TAIL_SPAN` times the largest one, the integrand is continued as a power
/// law and integrated exactly. A local exponent `<= -1` at either end is
/// reported as a non-integrable singularity.
pub fn integrate_radial<G: Fn(f64) -> f64>(
    g: &G,
    domain: &RadialDomain,
    opts: QuadOptions,
) -> Result<QuadResult> {
    let mut feats: Vec<f64> = domain
        .features
        .iter()
        .copied()
        .filter(|r| r.is_finite() && *r > domain.inner && *r < domain.outer)
        .collect();
    if domain.outer.is_finite() {
        feats.push(domain.outer);
    }
    if domain.inner > 0.0 {
        feats.push(domain.inner);
    }
    if feats.is_empty() {
        feats.push(1.0);
    }
    feats.sort_by(f64::total_cmp);
    feats.dedup();
    let f_min = feats[0];
    let f_max = *feats.last().unwrap();

    let r_lo = if domain.inner > 0.0 { domain.inner } else { f_min * HEAD_SPAN };
    let r_hi = if domain.outer.is_finite() {
        domain.outer
    } else {
        f_max * TAIL_SPAN
    };
    let (x_lo, x_hi) = (r_lo.ln(), r_hi.ln());

    // breakpoints in x: features, unit-width fill between them, doubling steps
    // outside the feature range
    let mut xs: Vec<f64> = vec![x_lo, x_hi];
    let lf: Vec<f64> = feats.iter().map(|r| r.ln()).collect();
    for w in lf.windows(2) {
        let gap = w[1] - w[0];
        let pieces = gap.ceil().max(1.0) as usize;
        for k in 0..pieces {
            xs.push(w[0] + gap * k as f64 / pieces as f64);
        }
    }
    xs.extend(lf.iter().copied());
    let mut step = 1.0;
    while lf[0] - step > x_lo {
        xs.push(lf[0] - step);
        step *= 2.0;
    }
    let mut step = 1.0;
    while lf[lf.len() - 1] + step < x_hi {
        xs.push(lf[lf.len() - 1] + step);
        step *= 2.0;
    }
    xs.retain(|x| *x >= x_lo && *x <= x_hi);
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * b.abs().max(1.0));

    let h = |x: f64| {
        let r = x.exp();
        g(r) * r
    };
    let mut res = adaptive(&h, &xs, opts);

    if domain.inner == 0.0 {
        if let Some((kappa, _)) = local_exponent(g, r_lo, 2.0 * r_lo) {
            if kappa <= -1.0 + 1e-9 {
                return Err(Error::Integrability(format!(
                    "integrand behaves like r^{kappa:.4} at the origin"
                )));
            }
            let head = g(r_lo) * r_lo / (kappa + 1.0);
            res.value += head;
            res.error += 1e-8 * head.abs();
        }
    }
    if !domain.outer.is_finite() {
        if let Some((kappa, g_hi)) = local_exponent(g, 0.5 * r_hi, r_hi) {
            if kappa >= -1.0 - 1e-9 {
                return Err(Error::Integrability(format!(
                    "integrand decays like r^{kappa:.4} at infinity"
                )));
            }
            let tail = -g_hi * r_hi / (kappa + 1.0);
            let alt = local_exponent(g, 0.25 * r_hi, 0.5 * r_hi)
                .map(|(k2, _)| (-g_hi * r_hi / (k2 + 1.0) - tail).abs())
                .unwrap_or(tail.abs());
            res.value += tail;
            res.error += alt;
        }
    }
    Ok(res)
}

/// Accepts a finished integral or turns a runaway refinement into an
/// integrability error.
pub fn accept(res: QuadResult, what: &str) -> Result<QuadResult> {
    if res.converged || res.error <= 1e-6 * res.value.abs() {
        Ok(res)
    } else {
        Err(Error::Integrability(format!(
            "{what}: quadrature failed to converge (value {:.6e}, error {:.3e})",
            res.value, res.error
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_is_exact_on_polynomials() {
        let (v, _) = gauss_kronrod(&|x: f64| x.powi(10) - 3.0 * x.powi(3), 0.0, 2.0);
        let exact = 2f64.powi(11) / 11.0 - 3.0 * 16.0 / 4.0;
        assert!((v - exact).abs() < 1e-12 * exact.abs());
    }

    #[test]
    fn adaptive_handles_sqrt_endpoint() {
        let r = adaptive(&|x: f64| x.sqrt(), &[0.0, 1.0], QuadOptions::default());
        assert!((r.value - 2.0 / 3.0).abs() < 1e-10);
        assert!(r.converged);
    }

    #[test]
    fn radial_gaussian_moment() {
        // ∫_0^∞ r² e^{-r²} dr = √π / 4
        let g = |r: f64| r * r * (-r * r).exp();
        let dom = RadialDomain::new(0.0, f64::INFINITY, [1.0]);
        let r = integrate_radial(&g, &dom, QuadOptions::default()).unwrap();
        let exact = std::f64::consts::PI.sqrt() / 4.0;
        assert!((r.value - exact).abs() < 1e-12, "{}", r.value);
    }

    #[test]
    fn radial_power_tails_are_closed_analytically() {
        // ∫_0^∞ r^{-1/2} / (1 + r)^{1.5} dr = B(1/2, 1) = 2
        let g = |r: f64| r.powf(-0.5) / (1.0 + r).powf(1.5);
        let dom = RadialDomain::new(0.0, f64::INFINITY, [1.0]);
        let r = integrate_radial(&g, &dom, QuadOptions::default()).unwrap();
        assert!((r.value - 2.0).abs() < 1e-10, "{}", r.value);
    }

    #[test]
    fn divergence_is_detected() {
        let g = |r: f64| r.powf(-1.2);
        let dom = RadialDomain::new(0.0, 1.0, []);
        assert!(matches!(
            integrate_radial(&g, &dom, QuadOptions::default()),
            Err(Error::Integrability(_))
        ));
        let g = |r: f64| 1.0 / (1.0 + r);
        let dom = RadialDomain::new(0.0, f64::INFINITY, [1.0]);
        assert!(integrate_radial(&g, &dom, QuadOptions::default()).is_err());
    }
}

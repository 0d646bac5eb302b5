//! Integral functionals of radial functions: norms, gradient energies,
//! weighted norms and the Rayleigh quotients built from them.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::ModelManifold;
use crate::radial::{integrate_on, QuadOptions, RadialDomain, RadialFunction};

/// A nonnegative functional value with an absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FunctionalValue {
    pub value: f64,
    pub quadrature_error: f64,
}

impl FunctionalValue {
    pub fn rel_error(&self) -> f64 {
        if self.value == 0.0 {
            0.0
        } else {
            self.quadrature_error / self.value.abs()
        }
    }

    /// `value^e` with first-order error propagation.
    pub fn powf(self, e: f64) -> FunctionalValue {
        let v = self.value.powf(e);
        FunctionalValue {
            value: v,
            quadrature_error: v * e.abs() * self.rel_error(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotonicity {
    Constant,
    Nonincreasing,
    Increasing,
}

/// Radial weights `w(r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum WeightSpec {
    Constant,
    /// `r^exponent`.
    Power { exponent: f64 },
    /// `Σ c_i r^{e_i}` with `c_i > 0`.
    Terms { terms: Vec<(f64, f64)> },
}

impl WeightSpec {
    pub fn power(exponent: f64) -> Self {
        if exponent == 0.0 {
            WeightSpec::Constant
        } else {
            WeightSpec::Power { exponent }
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            WeightSpec::Constant => 1.0,
            WeightSpec::Power { exponent } => r.powf(*exponent),
            WeightSpec::Terms { terms } => terms.iter().map(|(c, e)| c * r.powf(*e)).sum(),
        }
    }

    /// Derived from the exponents; `None` when the weight is not monotone.
    pub fn monotonicity(&self) -> Option<Monotonicity> {
        match self {
            WeightSpec::Constant => Some(Monotonicity::Constant),
            WeightSpec::Power { exponent } if *exponent == 0.0 => Some(Monotonicity::Constant),
            WeightSpec::Power { exponent } if *exponent < 0.0 => Some(Monotonicity::Nonincreasing),
            WeightSpec::Power { .. } => Some(Monotonicity::Increasing),
            WeightSpec::Terms { terms } => {
                if terms.iter().any(|(c, _)| *c <= 0.0) {
                    return None;
                }
                let live = terms.iter().filter(|(_, e)| *e != 0.0);
                let (neg, pos) = live.fold((0, 0), |(n, p), (_, e)| {
                    if *e < 0.0 {
                        (n + 1, p)
                    } else {
                        (n, p + 1)
                    }
                });
                match (neg, pos) {
                    (0, 0) => Some(Monotonicity::Constant),
                    (_, 0) => Some(Monotonicity::Nonincreasing),
                    (0, _) => Some(Monotonicity::Increasing),
                    _ => None,
                }
            }
        }
    }

    /// Most singular exponent at the origin.
    pub fn min_exponent(&self) -> f64 {
        match self {
            WeightSpec::Constant => 0.0,
            WeightSpec::Power { exponent } => *exponent,
            WeightSpec::Terms { terms } => terms.iter().map(|(_, e)| *e).fold(0.0, f64::min),
        }
    }
}

impl fmt::Display for WeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightSpec::Constant => write!(f, "1"),
            WeightSpec::Power { exponent } => write!(f, "r^{exponent}"),
            WeightSpec::Terms { terms } => {
                let parts: Vec<String> = terms.iter().map(|(c, e)| format!("{c}*r^{e}")).collect();
                write!(f, "{}", parts.join("+"))
            }
        }
    }
}

fn domain_of<U: RadialFunction + ?Sized>(u: &U) -> RadialDomain {
    let (inner, outer) = u.support();
    RadialDomain::new(inner, outer, u.features())
}

/// `∫_M g(r, u(r), u'(r)) dV` over the support of `u`.
pub fn integral<U, G>(u: &U, m: &ModelManifold, g: G) -> Result<FunctionalValue>
where
    U: RadialFunction + ?Sized,
    G: Fn(f64, f64, f64) -> f64,
{
    integral_with(u, m, g, QuadOptions::default())
}

pub fn integral_with<U, G>(u: &U, m: &ModelManifold, g: G, opts: QuadOptions) -> Result<FunctionalValue>
where
    U: RadialFunction + ?Sized,
    G: Fn(f64, f64, f64) -> f64,
{
    let dom = domain_of(u);
    if dom.outer <= dom.inner {
        return Ok(FunctionalValue {
            value: 0.0,
            quadrature_error: 0.0,
        });
    }
    let res = integrate_on(
        m,
        |r| {
            let (v, d) = u.eval(r);
            g(r, v, d)
        },
        &dom,
        opts,
    )?;
    Ok(FunctionalValue {
        value: res.value,
        quadrature_error: res.error,
    })
}

fn check_p(p: f64, min: f64, strict: bool) -> Result<()> {
    if p.is_finite() && (p > min || (!strict && p == min)) {
        Ok(())
    } else {
        let range = if strict { format!("({min}, inf)") } else { format!("[{min}, inf)") };
        Err(Error::domain("p", p, range))
    }
}

fn check_weight<U: RadialFunction + ?Sized>(u: &U, m: &ModelManifold, e: f64) -> Result<()> {
    if u.support().0 == 0.0 && e <= -(m.n() as f64) {
        return Err(Error::Integrability(format!(
            "weight r^{e} is not integrable at the origin in dimension {}",
            m.n()
        )));
    }
    Ok(())
}

/// `∫_M |u|^p dV`.
pub fn lp_integral<U: RadialFunction + ?Sized>(u: &U, m: &ModelManifold, p: f64) -> Result<FunctionalValue> {
    check_p(p, 1.0, false)?;
    integral(u, m, |_, v, _| v.abs().powf(p))
}

/// `‖u‖_{L^p(M)}`.
pub fn lp_norm<U: RadialFunction + ?Sized>(u: &U, m: &ModelManifold, p: f64) -> Result<FunctionalValue> {
    Ok(lp_integral(u, m, p)?.powf(1.0 / p))
}

/// `∫_M |Du|^p dV`; for radial `u`, `|Du| = |u'(r)|`.
pub fn grad_integral<U: RadialFunction + ?Sized>(u: &U, m: &ModelManifold, p: f64) -> Result<FunctionalValue> {
    check_p(p, 1.0, true)?;
    integral(u, m, |_, _, d| d.abs().powf(p))
}

/// `‖Du‖_{L^p(M)}`.
pub fn grad_lp<U: RadialFunction + ?Sized>(u: &U, m: &ModelManifold, p: f64) -> Result<FunctionalValue> {
    Ok(grad_integral(u, m, p)?.powf(1.0 / p))
}

/// `∫_M |u|^p w(r) dV`.
pub fn weighted_lp<U: RadialFunction + ?Sized>(
    u: &U,
    m: &ModelManifold,
    w: &WeightSpec,
    p: f64,
) -> Result<FunctionalValue> {
    check_p(p, 1.0, false)?;
    check_weight(u, m, w.min_exponent())?;
    integral(u, m, |r, v, _| {
        if v == 0.0 {
            0.0
        } else {
            v.abs().powf(p) * w.eval(r)
        }
    })
}

/// `∫_M |Du|^p w(r) dV`.
pub fn weighted_grad<U: RadialFunction + ?Sized>(
    u: &U,
    m: &ModelManifold,
    w: &WeightSpec,
    p: f64,
) -> Result<FunctionalValue> {
    check_p(p, 1.0, true)?;
    integral(u, m, |r, _, d| {
        if d == 0.0 {
            0.0
        } else {
            d.abs().powf(p) * w.eval(r)
        }
    })
}

/// The ratios whose infima are the sharp constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QuotientSpec {
    /// `∫|Du|^p / ∫|u|^p r^{-p}`.
    Hardy { p: f64 },
    /// `(∫r²u²)(∫|Du|²) / (∫u²)²`.
    Hpw,
    /// `∫|Du|^p / (∫|u|^q r^{-s})^{(n-p)/(n-s)}`, `q = p(n-s)/(n-p)`.
    HardySobolev { p: f64, s: f64 },
    /// `∫r^{-2a}|Du|² / (∫r^{-bq}|u|^q)^{2/q}`, `q = 2n/(n-2+2(b-a))`.
    Ckn { a: f64, b: f64 },
}

/// A quotient value with its propagated relative error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quotient {
    pub value: f64,
    pub rel_error: f64,
}

fn ratio(num: FunctionalValue, den: FunctionalValue) -> Result<Quotient> {
    if !(den.value > 0.0) {
        return Err(Error::DegenerateInput("quotient denominator vanishes".into()));
    }
    Ok(Quotient {
        value: num.value / den.value,
        rel_error: num.rel_error() + den.rel_error(),
    })
}

/// Evaluates a Rayleigh quotient; every quotient is invariant under `u ↦ λu`.
pub fn rayleigh_quotient<U: RadialFunction + ?Sized>(
    u: &U,
    m: &ModelManifold,
    spec: &QuotientSpec,
) -> Result<Quotient> {
    let n = m.n() as f64;
    match *spec {
        QuotientSpec::Hardy { p } => {
            let num = grad_integral(u, m, p)?;
            let den = weighted_lp(u, m, &WeightSpec::power(-p), p)?;
            ratio(num, den)
        }
        QuotientSpec::Hpw => {
            let mom = weighted_lp(u, m, &WeightSpec::power(2.0), 2.0)?;
            let grad = grad_integral(u, m, 2.0)?;
            let l2 = lp_integral(u, m, 2.0)?;
            let num = FunctionalValue {
                value: mom.value * grad.value,
                quadrature_error: mom.value * grad.value * (mom.rel_error() + grad.rel_error()),
            };
            ratio(num, l2.powf(2.0))
        }
        QuotientSpec::HardySobolev { p, s } => {
            let q = p * (n - s) / (n - p);
            let num = grad_integral(u, m, p)?;
            let den = weighted_lp(u, m, &WeightSpec::power(-s), q)?.powf((n - p) / (n - s));
            ratio(num, den)
        }
        QuotientSpec::Ckn { a, b } => {
            let q = 2.0 * n / (n - 2.0 + 2.0 * (b - a));
            let num = weighted_grad(u, m, &WeightSpec::power(-2.0 * a), 2.0)?;
            let den = weighted_lp(u, m, &WeightSpec::power(-b * q), q)?.powf(2.0 / q);
            ratio(num, den)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::{materialize, ProfileFamily, RadialGrid, RadialProfile};
    use std::f64::consts::PI;

    fn profile(m: &ModelManifold, f: ProfileFamily) -> RadialProfile {
        materialize(&f, m, &RadialGrid::default_for(m).unwrap()).unwrap()
    }

    #[test]
    fn gaussian_l2_norm() {
        let m = ModelManifold::euclidean(3, 50.0).unwrap();
        let u = profile(&m, ProfileFamily::Gaussian { alpha: 1.0 });
        let v = lp_norm(&u, &m, 2.0).unwrap().value;
        assert!((v / (PI / 2.0).powf(0.75) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn bump_energies_match_polynomial_integrals() {
        // u = (1 - r²)², u' = -4r(1 - r²)
        let m = ModelManifold::euclidean(3, 50.0).unwrap();
        let u = profile(&m, ProfileFamily::Bump { radius: 1.0, k: 2.0 });
        // 4π ∫ 16 r^4 (1-r²)^2 dr = 64π (1/5 - 2/7 + 1/9)
        let g = grad_integral(&u, &m, 2.0).unwrap().value;
        let want = 64.0 * PI * (1.0 / 5.0 - 2.0 / 7.0 + 1.0 / 9.0);
        assert!((g / want - 1.0).abs() < 1e-10, "{g} {want}");
        // 4π ∫ (1-r²)^4 dr with weight r^{-2}
        let w = weighted_lp(&u, &m, &WeightSpec::power(-2.0), 2.0).unwrap().value;
        let want = 4.0 * PI * (1.0 - 4.0 / 3.0 + 6.0 / 5.0 - 4.0 / 7.0 + 1.0 / 9.0);
        assert!((w / want - 1.0).abs() < 1e-10, "{w} {want}");
    }

    #[test]
    fn weight_monotonicity() {
        assert_eq!(WeightSpec::power(-1.0).monotonicity(), Some(Monotonicity::Nonincreasing));
        assert_eq!(WeightSpec::power(2.0).monotonicity(), Some(Monotonicity::Increasing));
        assert_eq!(WeightSpec::power(0.0).monotonicity(), Some(Monotonicity::Constant));
        let mixed = WeightSpec::Terms { terms: vec![(1.0, -1.0), (1.0, 2.0)] };
        assert_eq!(mixed.monotonicity(), None);
    }

    #[test]
    fn over_singular_weight_is_rejected() {
        let m = ModelManifold::euclidean(3, 50.0).unwrap();
        let u = profile(&m, ProfileFamily::Gaussian { alpha: 1.0 });
        let err = weighted_lp(&u, &m, &WeightSpec::power(-3.0), 2.0).unwrap_err();
        assert!(matches!(err, Error::Integrability(_)));
    }

    #[test]
    fn gaussian_hpw_quotient_is_extremal() {
        let m = ModelManifold::euclidean(3, 50.0).unwrap();
        for alpha in [0.5, 1.0, 3.0] {
            let u = profile(&m, ProfileFamily::Gaussian { alpha });
            let q = rayleigh_quotient(&u, &m, &QuotientSpec::Hpw).unwrap().value;
            assert!((q / 2.25 - 1.0).abs() < 1e-8, "alpha {alpha}: {q}");
        }
    }

    #[test]
    fn quotient_is_scale_invariant() {
        let m = ModelManifold::smoothed_cone(3, 0.5, 1.0, 50.0).unwrap();
        let u = profile(&m, ProfileFamily::Bump { radius: 2.0, k: 3.0 });
        let spec = QuotientSpec::HardySobolev { p: 2.0, s: 1.0 };
        let a = rayleigh_quotient(&u, &m, &spec).unwrap().value;
        let b = rayleigh_quotient(&u.scaled(7.5), &m, &spec).unwrap().value;
        assert!((a / b - 1.0).abs() < 1e-12);
    }
}

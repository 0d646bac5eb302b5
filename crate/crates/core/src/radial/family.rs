//! Parametric test-function families.
//!
//! Every member is bounded, vanishes beyond its support radius and carries an
//! analytic derivative. Families with unbounded support in their raw form are
//! multiplied by a C² cutoff that decays over a band in `ln r`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Quintic smoothstep, `S(0) = 0`, `S(1) = 1`, with `S'` and `S''` vanishing
/// at both ends.
pub(crate) fn smoothstep(x: f64) -> (f64, f64) {
    if x <= 0.0 {
        (0.0, 0.0)
    } else if x >= 1.0 {
        (1.0, 0.0)
    } else {
        let x2 = x * x;
        (x2 * x * (10.0 - 15.0 * x + 6.0 * x2), 30.0 * x2 * (1.0 - x) * (1.0 - x))
    }
}

/// `∫_0^x S`.
fn smoothstep_integral(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    let x4 = x.powi(4);
    x4 * (x * x - 3.0 * x + 2.5)
}

/// Cutoff equal to 1 below `a`, 0 above `b`, decaying smoothly in `ln r`.
fn log_cutoff(r: f64, a: f64, b: f64) -> (f64, f64) {
    if r <= a {
        return (1.0, 0.0);
    }
    if r >= b {
        return (0.0, 0.0);
    }
    let span = (b / a).ln();
    let (s, ds) = smoothstep((r / a).ln() / span);
    (1.0 - s, -ds / (r * span))
}

/// A named family and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ProfileFamily {
    /// `exp(-α r²)`, cut off once it is below `e^{-40}`.
    Gaussian { alpha: f64 },
    /// `(1 - (r/R)²)_+^k`.
    Bump { radius: f64, k: f64 },
    /// `r^{-β}` on `[ε, 1/ε]`, flattened to a constant over the decade below
    /// `ε` and cut off over the decade above `1/ε`.
    HardyNearExtremal { beta: f64, eps: f64 },
    /// `(1 + r^{p/(p-1)})^{-(n-p)/p}`, cut off over the decade below `support`.
    Talenti { p: f64, support: f64 },
    /// `h1 (1 - (r/w1)²)_+³ + h2 (1 - ((r-c2)/w2)²)_+³`; not monotone.
    TwoBump {
        h1: f64,
        w1: f64,
        h2: f64,
        c2: f64,
        w2: f64,
    },
    /// `(4 (r - r_in)(r_out - r) / (r_out - r_in)²)_+^k`, supported away from
    /// the pole.
    Annulus { r_in: f64, r_out: f64, k: f64 },
    /// `h` on `[0, R]`, descending to 0 over `[R, R + ramp]`.
    Plateau { height: f64, radius: f64, ramp: f64 },
}

const GAUSS_CUT: f64 = 40.0;

impl ProfileFamily {
    pub fn name(&self) -> &'static str {
        match self {
            ProfileFamily::Gaussian { .. } => "gaussian",
            ProfileFamily::Bump { .. } => "bump",
            ProfileFamily::HardyNearExtremal { .. } => "hardy_near_extremal",
            ProfileFamily::Talenti { .. } => "talenti",
            ProfileFamily::TwoBump { .. } => "two_bump",
            ProfileFamily::Annulus { .. } => "annulus",
            ProfileFamily::Plateau { .. } => "plateau",
        }
    }

    /// Parameter names and values in canonical order.
    pub fn params(&self) -> Vec<(&'static str, f64)> {
        match *self {
            ProfileFamily::Gaussian { alpha } => vec![("alpha", alpha)],
            ProfileFamily::Bump { radius, k } => vec![("radius", radius), ("k", k)],
            ProfileFamily::HardyNearExtremal { beta, eps } => vec![("beta", beta), ("eps", eps)],
            ProfileFamily::Talenti { p, support } => vec![("p", p), ("support", support)],
            ProfileFamily::TwoBump { h1, w1, h2, c2, w2 } => {
                vec![("h1", h1), ("w1", w1), ("h2", h2), ("c2", c2), ("w2", w2)]
            }
            ProfileFamily::Annulus { r_in, r_out, k } => {
                vec![("r_in", r_in), ("r_out", r_out), ("k", k)]
            }
            ProfileFamily::Plateau { height, radius, ramp } => {
                vec![("height", height), ("radius", radius), ("ramp", ramp)]
            }
        }
    }

    /// Parameter names accepted for a family name, in canonical order.
    pub fn param_names(family: &str) -> Option<&'static [&'static str]> {
        Some(match family {
            "gaussian" => &["alpha"],
            "bump" => &["radius", "k"],
            "hardy_near_extremal" => &["beta", "eps"],
            "talenti" => &["p", "support"],
            "two_bump" => &["h1", "w1", "h2", "c2", "w2"],
            "annulus" => &["r_in", "r_out", "k"],
            "plateau" => &["height", "radius", "ramp"],
            _ => return None,
        })
    }

    /// Builds a family from its name and parameters in canonical order.
    pub fn from_params(family: &str, v: &[f64]) -> Result<Self> {
        let names = Self::param_names(family)
            .ok_or_else(|| Error::Config(format!("unknown profile family '{family}'")))?;
        if v.len() != names.len() {
            return Err(Error::Config(format!(
                "family '{family}' takes parameters {names:?}"
            )));
        }
        let f = match family {
            "gaussian" => ProfileFamily::Gaussian { alpha: v[0] },
            "bump" => ProfileFamily::Bump { radius: v[0], k: v[1] },
            "hardy_near_extremal" => ProfileFamily::HardyNearExtremal { beta: v[0], eps: v[1] },
            "talenti" => ProfileFamily::Talenti { p: v[0], support: v[1] },
            "two_bump" => ProfileFamily::TwoBump { h1: v[0], w1: v[1], h2: v[2], c2: v[3], w2: v[4] },
            "annulus" => ProfileFamily::Annulus { r_in: v[0], r_out: v[1], k: v[2] },
            _ => ProfileFamily::Plateau { height: v[0], radius: v[1], ramp: v[2] },
        };
        Ok(f)
    }

    /// Checks parameter ranges; `n` is needed by the Talenti family.
    pub fn validate(&self, n: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::Parameter(format!("{}: {msg}", self)));
        let pos = |x: f64| x > 0.0 && x.is_finite();
        match *self {
            ProfileFamily::Gaussian { alpha } if !pos(alpha) => bad("alpha must be positive".into()),
            ProfileFamily::Bump { radius, k } if !pos(radius) || !(k > 1.0) => {
                bad("needs radius > 0 and k > 1".into())
            }
            ProfileFamily::HardyNearExtremal { beta, eps } if !pos(beta) || !(eps > 0.0 && eps < 1.0) => {
                bad("needs beta > 0 and 0 < eps < 1".into())
            }
            ProfileFamily::Talenti { p, support } if !(p > 1.0 && p < n as f64) || !(support > 10.0) => {
                bad(format!("needs 1 < p < n = {n} and support > 10"))
            }
            ProfileFamily::TwoBump { h1, w1, h2, c2, w2 }
                if !pos(w1) || !pos(w2) || !pos(c2) || h1 < 0.0 || h2 < 0.0 || h1 + h2 <= 0.0 =>
            {
                bad("needs positive widths and centre, nonnegative heights".into())
            }
            ProfileFamily::Annulus { r_in, r_out, k } if !pos(r_in) || !(r_out > r_in) || !(k > 1.0) => {
                bad("needs 0 < r_in < r_out and k > 1".into())
            }
            ProfileFamily::Plateau { height, radius, ramp } if !pos(height) || !pos(radius) || !pos(ramp) => {
                bad("needs positive height, radius and ramp".into())
            }
            _ => Ok(()),
        }
    }

    /// `(inner, outer)` support radii.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            ProfileFamily::Gaussian { alpha } => (0.0, 2.0 * (GAUSS_CUT / alpha).sqrt()),
            ProfileFamily::Bump { radius, .. } => (0.0, radius),
            ProfileFamily::HardyNearExtremal { eps, .. } => (0.0, 10.0 / eps),
            ProfileFamily::Talenti { support, .. } => (0.0, support),
            ProfileFamily::TwoBump { w1, c2, w2, .. } => (0.0, w1.max(c2 + w2)),
            ProfileFamily::Annulus { r_in, r_out, .. } => (r_in, r_out),
            ProfileFamily::Plateau { radius, ramp, .. } => (0.0, radius + ramp),
        }
    }

    /// Radii where the profile changes character; quadrature breakpoints.
    pub fn features(&self) -> Vec<f64> {
        let mut f = match *self {
            ProfileFamily::Gaussian { alpha } => {
                let r0 = (GAUSS_CUT / alpha).sqrt();
                vec![1.0 / alpha.sqrt(), r0, 2.0 * r0]
            }
            ProfileFamily::Bump { radius, .. } => vec![radius],
            ProfileFamily::HardyNearExtremal { eps, .. } => {
                vec![0.1 * eps, eps, 1.0, 1.0 / eps, 10.0 / eps]
            }
            ProfileFamily::Talenti { support, .. } => vec![1.0, 0.1 * support, support],
            ProfileFamily::TwoBump { w1, c2, w2, .. } => vec![w1, c2 - w2, c2, c2 + w2],
            ProfileFamily::Annulus { r_in, r_out, .. } => vec![r_in, 0.5 * (r_in + r_out), r_out],
            ProfileFamily::Plateau { radius, ramp, .. } => vec![radius, radius + ramp],
        };
        f.retain(|r| *r > 0.0);
        f.sort_by(f64::total_cmp);
        f.dedup();
        f
    }

    /// `(u(r), u'(r))` in dimension `n`.
    pub fn eval(&self, n: usize, r: f64) -> (f64, f64) {
        let (lo, hi) = self.support();
        if r >= hi || r <= lo && lo > 0.0 {
            return (0.0, 0.0);
        }
        match *self {
            ProfileFamily::Gaussian { alpha } => {
                let r0 = (GAUSS_CUT / alpha).sqrt();
                let g = (-alpha * r * r).exp();
                let (c, dc) = log_cutoff(r, r0, 2.0 * r0);
                (g * c, -2.0 * alpha * r * g * c + g * dc)
            }
            ProfileFamily::Bump { radius, k } => bump(r, radius, k),
            ProfileFamily::HardyNearExtremal { beta, eps } => {
                let a = 0.1 * eps;
                let span = std::f64::consts::LN_10;
                let (g, dg) = if r >= eps {
                    (-beta * r.ln(), -beta)
                } else {
                    let y = (r / a).ln() / span;
                    let (s, _) = smoothstep(y);
                    (
                        -beta * eps.ln() + beta * span * (0.5 - smoothstep_integral(y)),
                        -beta * s,
                    )
                };
                let u = g.exp();
                let du = u * dg / r;
                let (c, dc) = log_cutoff(r, 1.0 / eps, 10.0 / eps);
                (u * c, du * c + u * dc)
            }
            ProfileFamily::Talenti { p, support } => {
                let nf = n as f64;
                let e = p / (p - 1.0);
                let gamma = (nf - p) / p;
                let base = 1.0 + r.powf(e);
                let u = base.powf(-gamma);
                let du = -gamma * e * r.powf(e - 1.0) * base.powf(-gamma - 1.0);
                let (c, dc) = log_cutoff(r, 0.1 * support, support);
                (u * c, du * c + u * dc)
            }
            ProfileFamily::TwoBump { h1, w1, h2, c2, w2 } => {
                let (u1, d1) = bump(r, w1, 3.0);
                let x = (r - c2) / w2;
                let (u2, d2) = if x.abs() < 1.0 {
                    let b = 1.0 - x * x;
                    (b * b * b, -6.0 * x / w2 * b * b)
                } else {
                    (0.0, 0.0)
                };
                (h1 * u1 + h2 * u2, h1 * d1 + h2 * d2)
            }
            ProfileFamily::Annulus { r_in, r_out, k } => {
                let w = r_out - r_in;
                let x = 4.0 * (r - r_in) * (r_out - r) / (w * w);
                let dx = 4.0 * (r_in + r_out - 2.0 * r) / (w * w);
                (x.powf(k), k * x.powf(k - 1.0) * dx)
            }
            ProfileFamily::Plateau { height, radius, ramp } => {
                let (s, ds) = smoothstep((r - radius) / ramp);
                (height * (1.0 - s), -height * ds / ramp)
            }
        }
    }
}

fn bump(r: f64, radius: f64, k: f64) -> (f64, f64) {
    if r >= radius {
        return (0.0, 0.0);
    }
    let x = r / radius;
    let b = 1.0 - x * x;
    (b.powf(k), -2.0 * k * x / radius * b.powf(k - 1.0))
}

impl fmt::Display for ProfileFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.name())?;
        for (i, (k, v)) in self.params().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{k}={v}")?;
        }
        write!(f, ")")
    }
}

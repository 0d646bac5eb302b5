//! Trial functions on `R^n` for quotient minimization.

use std::sync::Arc;

use rand::Rng;

use crate::functionals::QuotientSpec;
use crate::radial::RadialFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialFamily {
    /// `(1 + r^α)^{-γ/α}` with `γ` above the critical decay rate.
    Talenti,
    /// `exp(-r^α)`.
    StretchedExponential,
}

const ALPHA_RANGE: (f64, f64) = (0.1, 20.0);
const EXP_ALPHA_RANGE: (f64, f64) = (0.2, 10.0);
/// Excess decay `γ - γ_c` is kept at least this large so every trial
/// quotient is finite.
pub const MIN_EXCESS_DECAY: f64 = 1e-3;
const MAX_EXCESS_DECAY: f64 = 20.0;

/// Decay rate `γ_c` at which `r^{-γ}` tails stop being admissible for the
/// quotient; `None` when tails must decay faster than any power.
pub fn critical_decay(spec: &QuotientSpec, n: usize) -> Option<f64> {
    let nf = n as f64;
    match *spec {
        QuotientSpec::Hardy { p } | QuotientSpec::HardySobolev { p, .. } => Some((nf - p) / p),
        QuotientSpec::Ckn { a, .. } => Some(0.5 * (nf - 2.0 - 2.0 * a)),
        QuotientSpec::Hpw => None,
    }
}

fn gradient_exponent(spec: &QuotientSpec) -> f64 {
    match *spec {
        QuotientSpec::Hardy { p } | QuotientSpec::HardySobolev { p, .. } => p,
        _ => 2.0,
    }
}

/// Log-coordinates of the Euclidean Sobolev extremal shape.
pub fn natural_start(family: TrialFamily, spec: &QuotientSpec, n: usize) -> Vec<f64> {
    match family {
        TrialFamily::Talenti => {
            let p = gradient_exponent(spec);
            let gc = critical_decay(spec, n).unwrap_or(1.0);
            vec![(p / (p - 1.0)).ln(), (gc / (p - 1.0)).max(1e-2).ln()]
        }
        TrialFamily::StretchedExponential => vec![2f64.ln()],
    }
}

pub fn random_start<R: Rng>(family: TrialFamily, rng: &mut R) -> Vec<f64> {
    match family {
        TrialFamily::Talenti => vec![
            rng.gen_range(0.5f64.ln()..5f64.ln()),
            rng.gen_range(0.01f64.ln()..2f64.ln()),
        ],
        TrialFamily::StretchedExponential => vec![rng.gen_range(0.5f64.ln()..5f64.ln())],
    }
}

/// `x` clamped to `[lo, hi]` in log scale, plus how far outside it was.
fn clamp_log(x: f64, (lo, hi): (f64, f64)) -> (f64, f64) {
    let (l, h) = (lo.ln(), hi.ln());
    let c = x.clamp(l, h);
    (c.exp(), (x - c).abs())
}

#[derive(Debug, Clone, Copy)]
pub struct TrialFunction {
    pub family: TrialFamily,
    pub alpha: f64,
    pub gamma: f64,
}

impl TrialFunction {
    /// Builds a member from search coordinates, returning a penalty that
    /// grows with the distance of the coordinates from the admissible box.
    pub fn from_coords(family: TrialFamily, decay: Option<f64>, x: &[f64]) -> (Self, f64) {
        match family {
            TrialFamily::Talenti => {
                let (alpha, da) = clamp_log(x[0], ALPHA_RANGE);
                let (excess, dd) = clamp_log(x[1], (MIN_EXCESS_DECAY, MAX_EXCESS_DECAY));
                let t = TrialFunction {
                    family,
                    alpha,
                    gamma: decay.unwrap_or(0.0) + excess,
                };
                (t, 1e-3 * (da * da + dd * dd))
            }
            TrialFamily::StretchedExponential => {
                let (alpha, da) = clamp_log(x[0], EXP_ALPHA_RANGE);
                let t = TrialFunction {
                    family,
                    alpha,
                    gamma: 0.0,
                };
                (t, 1e-3 * da * da)
            }
        }
    }
}

impl RadialFunction for TrialFunction {
    fn eval(&self, r: f64) -> (f64, f64) {
        if r <= 0.0 {
            return (1.0, 0.0);
        }
        match self.family {
            TrialFamily::Talenti => {
                // ln(1 + r^α) and r^α/(1 + r^α) without overflow
                let z = self.alpha * r.ln();
                let (l, sigma) = if z > 0.0 {
                    let e = (-z).exp();
                    (z + e.ln_1p(), 1.0 / (1.0 + e))
                } else {
                    let e = z.exp();
                    (e.ln_1p(), e / (1.0 + e))
                };
                let u = (-self.gamma / self.alpha * l).exp();
                (u, -self.gamma * sigma * u / r)
            }
            TrialFamily::StretchedExponential => {
                let ra = r.powf(self.alpha);
                let u = (-ra).exp();
                (u, -self.alpha * ra / r * u)
            }
        }
    }

    fn support(&self) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }

    fn features(&self) -> Vec<f64> {
        match self.family {
            // most of the mass sits where γ r^α/α ≈ 1, far below r = 1 for
            // small α and large γ
            TrialFamily::Talenti => {
                let knee = (self.alpha / self.gamma).powf(1.0 / self.alpha);
                if knee > 0.0 && knee < 1.0 {
                    vec![knee, 1.0]
                } else {
                    vec![1.0]
                }
            }
            TrialFamily::StretchedExponential => vec![1.0],
        }
    }
}

const FREE_RANGE: (f64, f64) = (1e-3, 1e3);

/// A positive nonincreasing profile given by `ln u` at geometric nodes,
/// interpolated by monotone cubics in `(ln r, ln u)`, constant inside the
/// first node and continued by the power law of the last two nodes.
#[derive(Debug, Clone)]
pub struct FreeProfile {
    x: Arc<Vec<f64>>,
    y: Vec<f64>,
    d: Vec<f64>,
    kappa: f64,
    decay: f64,
}

impl FreeProfile {
    /// Samples `seed` at `nodes` geometric radii; `decay` is the slowest
    /// admissible power-law tail.
    pub fn fit<F: RadialFunction>(seed: &F, nodes: usize, decay: f64) -> Self {
        let nodes = nodes.max(3);
        let (lo, hi) = (FREE_RANGE.0.ln(), FREE_RANGE.1.ln());
        let x: Vec<f64> = (0..nodes)
            .map(|k| lo + (hi - lo) * k as f64 / (nodes - 1) as f64)
            .collect();
        let u0 = seed.eval(x[0].exp()).0.ln();
        let mut y: Vec<f64> = x.iter().map(|xk| seed.eval(xk.exp()).0.ln() - u0).collect();
        // the seed's local decay at the last node can sit below its
        // asymptotic rate; steepen the final cell if needed
        let last = nodes - 1;
        let h = x[last] - x[last - 1];
        let max_y = y[last - 1] - (decay + MIN_EXCESS_DECAY) * h;
        if y[last] > max_y {
            y[last] = max_y;
        }
        let mut f = FreeProfile {
            x: Arc::new(x),
            y: Vec::new(),
            d: Vec::new(),
            kappa: 0.0,
            decay,
        };
        f.set(y);
        f
    }

    /// `ln u` at the nodes.
    pub fn values(&self) -> &[f64] {
        &self.y
    }

    /// Tail exponent `κ` in `u ~ r^{-κ}`.
    pub fn tail_exponent(&self) -> f64 {
        self.kappa
    }

    /// The same nodes with new values; `None` if the tail is too slow.
    pub fn with_values(&self, y: &[f64]) -> Option<FreeProfile> {
        let mut f = FreeProfile {
            x: self.x.clone(),
            y: Vec::new(),
            d: Vec::new(),
            kappa: 0.0,
            decay: self.decay,
        };
        f.set(y.to_vec());
        (f.kappa > f.decay && y.windows(2).all(|w| w[1] <= w[0])).then_some(f)
    }

    fn set(&mut self, y: Vec<f64>) {
        let x = &self.x;
        let k = x.len();
        let delta: Vec<f64> = (0..k - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
        let mut d = vec![0.0; k];
        for i in 1..k - 1 {
            let (d0, d1) = (delta[i - 1], delta[i]);
            if d0 * d1 > 0.0 {
                let (h0, h1) = (x[i] - x[i - 1], x[i + 1] - x[i]);
                let (w1, w2) = (2.0 * h1 + h0, h1 + 2.0 * h0);
                d[i] = (w1 + w2) / (w1 / d0 + w2 / d1);
            }
        }
        d[k - 1] = delta[k - 2];
        self.kappa = -delta[k - 2];
        self.y = y;
        self.d = d;
    }
}

impl RadialFunction for FreeProfile {
    fn eval(&self, r: f64) -> (f64, f64) {
        let x = &self.x;
        let k = x.len();
        if r <= 0.0 {
            return (self.y[0].exp(), 0.0);
        }
        let lr = r.ln();
        if lr <= x[0] {
            return (self.y[0].exp(), 0.0);
        }
        if lr >= x[k - 1] {
            let u = (self.y[k - 1] - self.kappa * (lr - x[k - 1])).exp();
            return (u, -self.kappa * u / r);
        }
        let i = x.partition_point(|v| *v <= lr) - 1;
        let h = x[i + 1] - x[i];
        let t = (lr - x[i]) / h;
        let (y0, y1) = (self.y[i], self.y[i + 1]);
        let (m0, m1) = (self.d[i] * h, self.d[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let y = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1;
        let dy = ((6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * m1)
            / h;
        let u = y.exp();
        (u, u * dy / r)
    }

    fn support(&self) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }

    fn features(&self) -> Vec<f64> {
        self.x.iter().map(|v| v.exp()).collect()
    }
}

//! Distribution functions and the Euclidean rearrangement `u*`.
//!
//! `|u|` is split into monotone pieces at its critical points and zeros. The
//! level-set measure `μ(t) = |{|u| > t}|` is then a sum over pieces of ball
//! volume differences, each needing at most one crossing radius. `u*(ρ)` is
//! the smallest `t` with `μ(t) ≤ ω_n ρ^n`, solved pointwise by safeguarded
//! Newton iteration using `μ'(t) = -Σ_j |∂B_{r_j}| / |u'(r_j)|`, so values and
//! derivatives of `u*` are exact up to root-finding tolerance.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::manifold::ModelManifold;
use crate::radial::{RadialFunction, RadialGrid, RadialProfile};

/// Number of volume-quantile levels in a [`DistributionFunction`].
pub const QUANTILE_LEVELS: usize = 512;
const UNIFORM_LEVELS: usize = 64;

/// Sampled `t ↦ μ(t)`, with `t` decreasing from `max|u|` to 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionFunction {
    pub t_nodes: Vec<f64>,
    pub mu_values: Vec<f64>,
}

impl DistributionFunction {
    /// Linear interpolation between nodes; 0 above `max|u|`.
    pub fn eval(&self, t: f64) -> f64 {
        let k = self.t_nodes.len();
        if t >= self.t_nodes[0] {
            return 0.0;
        }
        if t <= self.t_nodes[k - 1] {
            return self.mu_values[k - 1];
        }
        // t_nodes is nonincreasing
        let i = self.t_nodes.partition_point(|x| *x > t);
        let (t0, t1) = (self.t_nodes[i - 1], self.t_nodes[i]);
        let (m0, m1) = (self.mu_values[i - 1], self.mu_values[i]);
        if t0 == t1 {
            return m1;
        }
        m0 + (m1 - m0) * (t0 - t) / (t0 - t1)
    }

    /// Approximate `inf{t : μ(t) ≤ v}` from the nodes.
    pub fn invert(&self, v: f64) -> f64 {
        let k = self.t_nodes.len();
        if v >= self.mu_values[k - 1] {
            return 0.0;
        }
        let i = self.mu_values.partition_point(|m| *m <= v);
        if i == 0 {
            return self.t_nodes[0];
        }
        let (t0, t1) = (self.t_nodes[i - 1], self.t_nodes[i]);
        let (m0, m1) = (self.mu_values[i - 1], self.mu_values[i]);
        if m1 == m0 {
            return t0;
        }
        t0 + (t1 - t0) * (v - m0) / (m1 - m0)
    }
}

#[derive(Debug, Clone)]
struct Piece {
    lo: f64,
    hi: f64,
    /// `|u|` at `lo` and `hi`.
    a: f64,
    b: f64,
    v_lo: f64,
    v_hi: f64,
    /// `(r, |u|)` samples strictly inside, for bracketing.
    samples: Vec<(f64, f64)>,
}

impl Piece {
    fn decreasing(&self) -> bool {
        self.a > self.b
    }
}

/// Exact level-set machinery for `|u|` on a model.
pub struct LevelSets {
    profile: RadialProfile,
    manifold: ModelManifold,
    pieces: Vec<Piece>,
    total: f64,
    max_abs: f64,
}

fn abs_eval(u: &RadialProfile, r: f64) -> (f64, f64) {
    let (v, d) = u.eval(r);
    if v < 0.0 {
        (-v, -d)
    } else {
        (v, d)
    }
}

/// Bisection on a sign change of `f` in `[a, b]`.
fn bisect_sign<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let fa = f(a);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if (f(mid) > 0.0) == (fa > 0.0) {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

impl LevelSets {
    pub fn new(u: &RadialProfile, m: &ModelManifold) -> Result<Self> {
        let (inner, outer) = (u.inner_radius(), u.support_radius());
        if outer > m.r_max() {
            return Err(Error::Parameter(format!(
                "profile support {outer} exceeds the model's r_max {}",
                m.r_max()
            )));
        }
        let mut radii: Vec<f64> = u
            .grid()
            .nodes()
            .iter()
            .copied()
            .chain(u.features())
            .filter(|r| *r > inner && *r < outer)
            .collect();
        radii.push(inner);
        radii.push(outer);
        radii.sort_by(f64::total_cmp);
        radii.dedup();

        let evals: Vec<(f64, f64, f64)> = radii
            .iter()
            .map(|&r| {
                let (v, d) = u.eval(r);
                (r, v, if v < 0.0 { -d } else { d })
            })
            .collect();

        // cut points: sign changes of u and of d|u|/dr
        let mut cuts = vec![inner];
        // last sample with a nonzero slope of |u|
        let mut last: Option<(usize, f64)> = None;
        for (i, &(r1, v1, d1)) in evals.iter().enumerate() {
            if i > 0 {
                let (r0, v0, _) = evals[i - 1];
                if v0 * v1 < 0.0 {
                    cuts.push(bisect_sign(|r| u.eval(r).0, r0, r1));
                    last = None;
                }
            }
            if d1 == 0.0 {
                continue;
            }
            if let Some((j, dj)) = last {
                if dj * d1 < 0.0 {
                    if j + 1 == i {
                        cuts.push(bisect_sign(|r| abs_eval(u, r).1, evals[j].0, r1));
                    } else {
                        // critical point on a sample, or a flat stretch
                        cuts.push(evals[j + 1].0);
                    }
                }
            }
            last = Some((i, d1));
        }
        cuts.push(outer);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();

        let mut pieces = Vec::with_capacity(cuts.len() - 1);
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            if hi <= lo {
                continue;
            }
            let samples = evals
                .iter()
                .filter(|(r, _, _)| *r > lo && *r < hi)
                .map(|(r, v, _)| (*r, v.abs()))
                .collect();
            pieces.push(Piece {
                lo,
                hi,
                a: if lo == inner && inner == 0.0 { abs_eval(u, 0.0).0 } else { abs_eval(u, lo).0 },
                b: abs_eval(u, hi).0,
                v_lo: m.volume(lo),
                v_hi: m.volume(hi),
                samples,
            });
        }
        let max_abs = pieces.iter().fold(0.0f64, |acc, p| acc.max(p.a).max(p.b));
        let mut ls = LevelSets {
            profile: u.clone(),
            manifold: m.clone(),
            pieces,
            total: 0.0,
            max_abs,
        };
        ls.total = ls.measure(0.0);
        Ok(ls)
    }

    /// `μ(0+)`: the volume of the support of `u`.
    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn max_abs(&self) -> f64 {
        self.max_abs
    }

    /// Boundary of `{|u| > t}` inside a monotone piece with `min < t < max`.
    fn crossing(&self, p: &Piece, t: f64) -> f64 {
        let dec = p.decreasing();
        let (mut x_in, mut x_out) = if dec { (p.lo, p.hi) } else { (p.hi, p.lo) };
        // narrow to one sample cell; |u| is monotone along the samples
        let s = &p.samples;
        if dec {
            let k = s.partition_point(|(_, v)| *v > t);
            if k > 0 {
                x_in = s[k - 1].0;
            }
            if k < s.len() {
                x_out = s[k].0;
            }
        } else {
            let k = s.partition_point(|(_, v)| *v <= t);
            if k > 0 {
                x_out = s[k - 1].0;
            }
            if k < s.len() {
                x_in = s[k].0;
            }
        }
        let mut r = 0.5 * (x_in + x_out);
        for _ in 0..200 {
            let (v, d) = abs_eval(&self.profile, r);
            if v > t {
                x_in = r;
            } else {
                x_out = r;
            }
            let width = (x_out - x_in).abs();
            if width <= 2.0 * f64::EPSILON * x_in.abs().max(x_out.abs()) {
                break;
            }
            let mut next = if d != 0.0 { r - (v - t) / d } else { f64::NAN };
            let (lo, hi) = if x_in < x_out { (x_in, x_out) } else { (x_out, x_in) };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - r).abs() <= 1e-15 * r.abs() {
                return next;
            }
            r = next;
        }
        0.5 * (x_in + x_out)
    }

    /// `μ(t)` together with `Σ_j |∂B_{r_j}| / |u'(r_j)|` over the crossing
    /// radii `r_j` of level `t`.
    pub fn measure_with_slope(&self, t: f64) -> (f64, f64) {
        let mut mu = 0.0;
        let mut slope = 0.0;
        for p in &self.pieces {
            let (mn, mx) = if p.a < p.b { (p.a, p.b) } else { (p.b, p.a) };
            if t >= mx {
                continue;
            }
            if t < mn {
                mu += p.v_hi - p.v_lo;
                continue;
            }
            let r = self.crossing(p, t);
            let v = self.manifold.volume(r);
            mu += if p.decreasing() { v - p.v_lo } else { p.v_hi - v };
            let d = self.profile.eval(r).1.abs();
            slope += if d > 0.0 {
                self.manifold.density(r) / d
            } else {
                f64::INFINITY
            };
        }
        (mu, slope)
    }

    /// `μ(t) = |{q ∈ M : |u(q)| > t}|`.
    pub fn measure(&self, t: f64) -> f64 {
        self.measure_with_slope(t).0
    }

    /// Samples `μ` at volume-quantile levels plus a uniform ladder in `t`.
    pub fn distribution(&self) -> DistributionFunction {
        let tmax = self.max_abs;
        if tmax == 0.0 {
            return DistributionFunction {
                t_nodes: vec![0.0],
                mu_values: vec![0.0],
            };
        }
        let coarse_n = 4 * QUANTILE_LEVELS;
        let coarse = DistributionFunction {
            t_nodes: (0..=coarse_n)
                .map(|i| tmax * (1.0 - i as f64 / coarse_n as f64))
                .collect(),
            mu_values: (0..=coarse_n)
                .map(|i| self.measure(tmax * (1.0 - i as f64 / coarse_n as f64)))
                .collect(),
        };
        let mut ts: Vec<f64> = (0..QUANTILE_LEVELS)
            .map(|k| coarse.invert(self.total * k as f64 / (QUANTILE_LEVELS - 1) as f64))
            .chain((0..=UNIFORM_LEVELS).map(|i| tmax * i as f64 / UNIFORM_LEVELS as f64))
            .collect();
        ts.sort_by(|a, b| b.total_cmp(a));
        ts.dedup();
        let mu_values = ts.iter().map(|&t| self.measure(t)).collect();
        DistributionFunction {
            t_nodes: ts,
            mu_values,
        }
    }

    fn single_decreasing(&self) -> bool {
        let live: Vec<&Piece> = self.pieces.iter().filter(|p| p.a > 0.0 || p.b > 0.0).collect();
        live.len() == 1 && live[0].lo == 0.0 && live[0].decreasing()
    }

    /// Values of `|u|` at piece ends: local extrema and plateau levels.
    fn critical_values(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .pieces
            .iter()
            .flat_map(|p| [p.a, p.b])
            .filter(|x| *x > 0.0 && *x < self.max_abs)
            .collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }
}

/// The Euclidean rearrangement as an exact radial function on `R^n`.
pub struct Rearranged {
    level: LevelSets,
    dist: DistributionFunction,
    n: usize,
    omega: f64,
    rho_support: f64,
    fast: bool,
    features: Vec<f64>,
    /// Narrow `ρ`-intervals around interior critical levels, as
    /// `(ρ_lo, ρ_hi, u*(ρ_lo), u*(ρ_hi))`.
    bands: Vec<(f64, f64, f64, f64)>,
}

/// Relative half-width of the level band replaced by a secant. Inside a
/// band `u*` is monotone and within `t(1 ± BAND_LEVEL)`, so the secant
/// changes `∫|Du*|^p` by `O(BAND_LEVEL · t)`.
const BAND_LEVEL: f64 = 1e-10;

impl Rearranged {
    pub fn new(u: &RadialProfile, m: &ModelManifold) -> Result<Self> {
        let level = LevelSets::new(u, m)?;
        let n = m.n();
        let omega = m.omega();
        let rho_of = |v: f64| (v / omega).powf(1.0 / n as f64);
        let rho_support = rho_of(level.total());
        let fast = level.single_decreasing();
        let dist = level.distribution();
        let mut features: Vec<f64> = Vec::new();
        let mut bands = Vec::new();
        for t in level.critical_values() {
            features.push(rho_of(level.measure(t)));
            features.push(rho_of(level.measure(t * (1.0 - 1e-12))));
            if fast || t <= 0.0 || t >= level.max_abs() {
                continue;
            }
            // near a local extremum |u| is flat to rounding, so level sets
            // within a few ulps of t are ill-conditioned
            let (t_hi, t_lo) = (t * (1.0 + BAND_LEVEL), t * (1.0 - BAND_LEVEL));
            let (r0, r1) = (rho_of(level.measure(t_hi)), rho_of(level.measure(t_lo)));
            if r1 > r0 {
                features.push(r0);
                features.push(r1);
                bands.push((r0, r1, t_hi, t_lo));
            }
        }
        if fast {
            features.extend(u.features().iter().map(|r| rho_of(m.volume(*r))));
        } else {
            for r in u.features() {
                let t = abs_eval(u, r).0;
                if t > 0.0 {
                    features.push(rho_of(level.measure(t)));
                }
            }
        }
        features.push(rho_support);
        features.retain(|r| *r > 0.0 && *r <= rho_support);
        features.sort_by(f64::total_cmp);
        features.dedup();
        Ok(Rearranged {
            level,
            dist,
            n,
            omega,
            rho_support,
            fast,
            features,
            bands,
        })
    }

    pub fn distribution(&self) -> &DistributionFunction {
        &self.dist
    }

    pub fn level_sets(&self) -> &LevelSets {
        &self.level
    }

    fn eval_fast(&self, rho: f64) -> (f64, f64) {
        let m = &self.level.manifold;
        let target = self.omega * rho.powi(self.n as i32);
        let r = m.inverse_volume(target);
        let (v, d) = abs_eval(&self.level.profile, r);
        let dr = self.n as f64 * self.omega * rho.powi(self.n as i32 - 1) / m.density(r);
        (v, d * dr)
    }

    fn eval_general(&self, rho: f64) -> (f64, f64) {
        if let Some(&(r0, r1, t0, t1)) = self.bands.iter().find(|b| rho > b.0 && rho < b.1) {
            let slope = (t1 - t0) / (r1 - r0);
            return (t0 + slope * (rho - r0), slope);
        }
        let target = self.omega * rho.powi(self.n as i32);
        let (mut t_lo, mut t_hi) = (0.0, self.level.max_abs());
        let mut t = self.dist.invert(target).clamp(0.0, t_hi);
        if !(t > t_lo && t < t_hi) {
            t = 0.5 * (t_lo + t_hi);
        }
        let mut slope = f64::INFINITY;
        for _ in 0..200 {
            let (mu, s) = self.level.measure_with_slope(t);
            slope = s;
            if mu > target {
                t_lo = t;
            } else {
                t_hi = t;
            }
            if (mu - target).abs() <= 4.0 * f64::EPSILON * target || t_hi - t_lo <= 2.0 * f64::EPSILON * t_hi {
                break;
            }
            let mut next = if s.is_finite() && s > 0.0 {
                t + (mu - target) / s
            } else {
                f64::NAN
            };
            if !(next > t_lo && next < t_hi) {
                next = 0.5 * (t_lo + t_hi);
            }
            t = next;
        }
        let du = if slope.is_finite() && slope > 0.0 {
            -(self.n as f64) * self.omega * rho.powi(self.n as i32 - 1) / slope
        } else {
            0.0
        };
        (t, du)
    }
}

impl RadialFunction for Rearranged {
    fn eval(&self, rho: f64) -> (f64, f64) {
        if rho >= self.rho_support {
            return (0.0, 0.0);
        }
        if rho <= 0.0 {
            return (self.level.max_abs(), 0.0);
        }
        if self.fast {
            self.eval_fast(rho)
        } else {
            self.eval_general(rho)
        }
    }

    fn support(&self) -> (f64, f64) {
        (0.0, self.rho_support)
    }

    fn features(&self) -> Vec<f64> {
        self.features.clone()
    }
}

/// The level-set measures of `|u|` on `m`.
pub fn distribution(u: &RadialProfile, m: &ModelManifold) -> Result<DistributionFunction> {
    Ok(LevelSets::new(u, m)?.distribution())
}

/// `u*` as a profile on the Euclidean model of the same dimension and
/// working radius.
pub fn rearrange(u: &RadialProfile, m: &ModelManifold) -> Result<RadialProfile> {
    let r = Rearranged::new(u, m)?;
    let grid = RadialGrid::geometric(1e-6 * m.r_max(), m.r_max(), u.grid().len())?;
    RadialProfile::from_function(Arc::new(r), grid, format!("rearranged({})", u.tag()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::{materialize, ProfileFamily};

    fn setup(m: &ModelManifold, f: ProfileFamily) -> RadialProfile {
        materialize(&f, m, &RadialGrid::default_for(m).unwrap()).unwrap()
    }

    #[test]
    fn plateau_measure_jumps() {
        let m = ModelManifold::euclidean(3, 50.0).unwrap();
        let u = setup(&m, ProfileFamily::Plateau { height: 1.0, radius: 1.0, ramp: 1e-6 });
        let ls = LevelSets::new(&u, &m).unwrap();
        let ball = 4.0 * std::f64::consts::PI / 3.0;
        for t in [0.01, 0.5, 0.999] {
            assert!((ls.measure(t) / ball - 1.0).abs() < 1e-5);
        }
        assert_eq!(ls.measure(1.0), 0.0);
        assert_eq!(ls.measure(1.5), 0.0);
    }

    #[test]
    fn gaussian_level_sets() {
        let m = ModelManifold::euclidean(3, 50.0).unwrap();
        let u = setup(&m, ProfileFamily::Gaussian { alpha: 1.0 });
        let ls = LevelSets::new(&u, &m).unwrap();
        let omega = m.omega();
        for t in [0.9, 0.5, 0.1, 1e-3, 1e-8] {
            let want = omega * (-f64::ln(t)).powf(1.5);
            assert!((ls.measure(t) / want - 1.0).abs() < 1e-10, "t = {t}");
        }
    }

    #[test]
    fn rearrangement_fixes_decreasing_profiles() {
        let m = ModelManifold::euclidean(4, 50.0).unwrap();
        let u = setup(&m, ProfileFamily::Bump { radius: 3.0, k: 2.5 });
        let s = rearrange(&u, &m).unwrap();
        for r in [1e-4, 0.3, 1.0, 2.2, 2.99, 3.5] {
            let (a, da) = u.eval(r);
            let (b, db) = s.eval(r);
            assert!((a - b).abs() < 1e-12, "r={r}: {a} vs {b}");
            assert!((da - db).abs() < 1e-9, "r={r}: {da} vs {db}");
        }
    }

    #[test]
    fn general_and_fast_paths_agree() {
        // a decreasing profile pushed through the general solver
        let m = ModelManifold::smoothed_cone(3, 0.5, 1.0, 50.0).unwrap();
        let u = setup(&m, ProfileFamily::Gaussian { alpha: 0.7 });
        let mut r = Rearranged::new(&u, &m).unwrap();
        assert!(r.fast);
        let fast: Vec<(f64, f64)> = [0.05, 0.4, 1.0, 2.5].iter().map(|x| r.eval(*x)).collect();
        r.fast = false;
        for (x, (v, d)) in [0.05, 0.4, 1.0, 2.5].iter().zip(fast) {
            let (v2, d2) = r.eval(*x);
            assert!((v - v2).abs() < 1e-12, "{x}: {v} {v2}");
            assert!((d - d2).abs() < 1e-8 * d.abs().max(1e-3), "{x}: {d} {d2}");
        }
    }
}

//! Rotationally symmetric model manifolds `dr² + φ(r)² g_{S^{n-1}}`.
//!
//! A model is a dimension `n ≥ 3`, a warp function `φ` and a working radius
//! `r_max`. Everything radial follows from `φ`: the volume density
//! `n ω_n φ^{n-1}`, geodesic ball volumes, the Laplacian of the distance
//! function `Δr = (n-1) φ'/φ`, and the two Ricci eigenvalues.

use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radial::quad::{self, QuadOptions, RadialDomain};

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    use std::f64::consts::PI;
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / n as f64 * unit_ball_volume(n - 2),
    }
}

/// Tabulated warp with supplied first and second derivatives. The first
/// node must be the pole `r = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedWarp {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
}

impl TabulatedWarp {
    fn validate(&self) -> Result<()> {
        let len = self.grid.len();
        if len < 2 || self.values.len() != len || self.first.len() != len || self.second.len() != len
        {
            return Err(Error::Parameter(
                "tabulated warp needs at least two nodes and equal-length columns".into(),
            ));
        }
        if self.grid[0] != 0.0 || self.values[0] != 0.0 {
            return Err(Error::Parameter(
                "tabulated warp must start at the pole with φ(0) = 0".into(),
            ));
        }
        if (self.first[0] - 1.0).abs() > 1e-6 {
            return Err(Error::Parameter(format!(
                "tabulated warp needs φ'(0) = 1, got {}",
                self.first[0]
            )));
        }
        if self.grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Parameter("tabulated warp grid must be strictly increasing".into()));
        }
        if self.values[1..].iter().any(|v| *v <= 0.0) {
            return Err(Error::Parameter("tabulated warp must satisfy φ(r) > 0 for r > 0".into()));
        }
        Ok(())
    }

    fn eval(&self, r: f64) -> WarpValue {
        let last = self.grid.len() - 1;
        if r >= self.grid[last] {
            // linear asymptote past the table
            let d = r - self.grid[last];
            return WarpValue {
                phi: self.values[last] + self.first[last] * d,
                dphi: self.first[last],
                ddphi: 0.0,
            };
        }
        let i = self.grid.partition_point(|x| *x <= r).saturating_sub(1).min(last - 1);
        let (x0, x1) = (self.grid[i], self.grid[i + 1]);
        let h = x1 - x0;
        let t = (r - x0) / h;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.first[i] * h, self.first[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let phi = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1;
        let dphi = ((6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * m1)
            / h;
        let ddphi = self.second[i] * (1.0 - t) + self.second[i + 1] * t;
        WarpValue { phi, dphi, ddphi }
    }
}

/// The warp `φ` of the model metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WarpFunction {
    Euclidean,
    /// `φ(r) = c r + (1 - c) δ tanh(r/δ)`.
    SmoothedCone { c: f64, delta: f64 },
    /// `φ(r) = c r`; singular at the vertex.
    ExactCone { c: f64 },
    Tabulated(TabulatedWarp),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarpValue {
    pub phi: f64,
    pub dphi: f64,
    pub ddphi: f64,
}

impl WarpFunction {
    fn validate(&self) -> Result<()> {
        match self {
            WarpFunction::Euclidean => Ok(()),
            WarpFunction::SmoothedCone { c, delta } => {
                if !(*c > 0.0 && *c <= 1.0) {
                    return Err(Error::domain("cone slope c", *c, "(0, 1]"));
                }
                if !(*delta > 0.0 && delta.is_finite()) {
                    return Err(Error::domain("cone smoothing delta", *delta, "(0, inf)"));
                }
                Ok(())
            }
            WarpFunction::ExactCone { c } => {
                if !(*c > 0.0 && *c <= 1.0) {
                    return Err(Error::domain("cone slope c", *c, "(0, 1]"));
                }
                Ok(())
            }
            WarpFunction::Tabulated(t) => t.validate(),
        }
    }

    pub fn eval(&self, r: f64) -> WarpValue {
        match self {
            WarpFunction::Euclidean => WarpValue {
                phi: r,
                dphi: 1.0,
                ddphi: 0.0,
            },
            WarpFunction::SmoothedCone { c, delta } => {
                let x = r / delta;
                let th = x.tanh();
                let sech2 = 1.0 - th * th;
                WarpValue {
                    phi: c * r + (1.0 - c) * delta * th,
                    dphi: c + (1.0 - c) * sech2,
                    ddphi: -2.0 * (1.0 - c) / delta * sech2 * th,
                }
            }
            WarpFunction::ExactCone { c } => WarpValue {
                phi: c * r,
                dphi: *c,
                ddphi: 0.0,
            },
            WarpFunction::Tabulated(t) => t.eval(r),
        }
    }

    /// `1 - φ'(r)`, evaluated without cancellation where a closed form exists.
    pub fn one_minus_slope(&self, r: f64) -> f64 {
        match self {
            WarpFunction::Euclidean => 0.0,
            WarpFunction::SmoothedCone { c, delta } => {
                let th = (r / delta).tanh();
                (1.0 - c) * th * th
            }
            WarpFunction::ExactCone { c } => 1.0 - c,
            WarpFunction::Tabulated(t) => 1.0 - t.eval(r).dphi,
        }
    }

    /// Length scale of the warp's transition region.
    fn scale(&self) -> f64 {
        match self {
            WarpFunction::SmoothedCone { delta, .. } => *delta,
            WarpFunction::Tabulated(t) => t.grid[1],
            _ => 1.0,
        }
    }
}

/// Volume of geodesic balls, tabulated on geometric panels so that any
/// `V(r)` costs one Kronrod panel.
#[derive(Debug)]
struct VolumeTable {
    nodes: Vec<f64>,
    volumes: Vec<f64>,
}

#[derive(Debug)]
struct Inner {
    n: usize,
    warp: WarpFunction,
    r_max: f64,
    omega: f64,
    table: Option<VolumeTable>,
    theta: OnceLock<std::result::Result<f64, String>>,
}

/// A model manifold. Cheap to clone; immutable after construction.
#[derive(Debug, Clone)]
pub struct ModelManifold {
    inner: Arc<Inner>,
}

impl ModelManifold {
    pub fn new(n: usize, warp: WarpFunction, r_max: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::domain("dimension n", n as f64, "n >= 3"));
        }
        if !(r_max > 0.0) {
            return Err(Error::domain("r_max", r_max, "(0, inf]"));
        }
        if r_max.is_infinite() && warp != WarpFunction::Euclidean {
            return Err(Error::Parameter("only the Euclidean model may be unbounded".into()));
        }
        warp.validate()?;
        let omega = unit_ball_volume(n);
        let table = match warp {
            WarpFunction::SmoothedCone { .. } | WarpFunction::Tabulated(_) => {
                Some(Self::build_table(n, omega, &warp, r_max))
            }
            _ => None,
        };
        Ok(ModelManifold {
            inner: Arc::new(Inner {
                n,
                warp,
                r_max,
                omega,
                table,
                theta: OnceLock::new(),
            }),
        })
    }

    pub fn euclidean(n: usize, r_max: f64) -> Result<Self> {
        Self::new(n, WarpFunction::Euclidean, r_max)
    }

    /// All of `R^n`, used when estimating Euclidean sharp constants.
    pub fn euclidean_unbounded(n: usize) -> Result<Self> {
        Self::new(n, WarpFunction::Euclidean, f64::INFINITY)
    }

    pub fn smoothed_cone(n: usize, c: f64, delta: f64, r_max: f64) -> Result<Self> {
        Self::new(n, WarpFunction::SmoothedCone { c, delta }, r_max)
    }

    pub fn exact_cone(n: usize, c: f64, r_max: f64) -> Result<Self> {
        Self::new(n, WarpFunction::ExactCone { c }, r_max)
    }

    fn build_table(n: usize, omega: f64, warp: &WarpFunction, r_max: f64) -> VolumeTable {
        let scale = warp.scale();
        let r0 = (1e-4 * scale).min(1e-6 * r_max);
        let mut nodes = vec![r0];
        let mut r = r0;
        while r < r_max {
            r = (r * 1.05).min(r_max);
            nodes.push(r);
        }
        if let WarpFunction::Tabulated(t) = warp {
            nodes.extend(t.grid.iter().copied().filter(|x| *x > r0 && *x < r_max));
            nodes.sort_by(f64::total_cmp);
            nodes.dedup();
        }
        let density = |s: f64| n as f64 * omega * warp.eval(s).phi.powi(n as i32 - 1);
        let mut volumes = Vec::with_capacity(nodes.len());
        let (v0, _) = quad::gauss_kronrod(&density, 0.0, r0);
        let mut acc = v0;
        volumes.push(acc);
        for w in nodes.windows(2) {
            acc += quad::gauss_kronrod(&density, w[0], w[1]).0;
            volumes.push(acc);
        }
        VolumeTable { nodes, volumes }
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    pub fn warp(&self) -> &WarpFunction {
        &self.inner.warp
    }

    pub fn r_max(&self) -> f64 {
        self.inner.r_max
    }

    /// `ω_n`, the Euclidean unit-ball volume.
    pub fn omega(&self) -> f64 {
        self.inner.omega
    }

    pub fn is_euclidean(&self) -> bool {
        self.inner.warp == WarpFunction::Euclidean
    }

    /// The exact cone has a conical singularity at the pole.
    pub fn is_vertex_singular(&self) -> bool {
        matches!(self.inner.warp, WarpFunction::ExactCone { c } if c < 1.0)
    }

    /// Euclidean model of the same dimension and working radius; the target
    /// space of rearrangements.
    pub fn euclidean_companion(&self) -> ModelManifold {
        ModelManifold::euclidean(self.n(), self.r_max()).expect("valid dimension and radius")
    }

    fn check_radius(&self, r: f64) -> Result<()> {
        if r > 0.0 && r <= self.r_max() {
            Ok(())
        } else {
            Err(Error::domain("radius r", r, format!("(0, {}]", self.r_max())))
        }
    }

    /// `(φ, φ', φ'')` at `r`.
    pub fn warp_eval(&self, r: f64) -> Result<WarpValue> {
        self.check_radius(r)?;
        Ok(self.inner.warp.eval(r))
    }

    /// Area of the geodesic sphere of radius `r`, `n ω_n φ(r)^{n-1}`.
    pub fn density(&self, r: f64) -> f64 {
        let n = self.n();
        n as f64 * self.omega() * self.inner.warp.eval(r).phi.powi(n as i32 - 1)
    }

    /// `V(r) = n ω_n ∫_0^r φ^{n-1}`, without the working-radius check.
    pub fn volume(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let n = self.n() as i32;
        match &self.inner.warp {
            WarpFunction::Euclidean => self.omega() * r.powi(n),
            WarpFunction::ExactCone { c } => self.omega() * c.powi(n - 1) * r.powi(n),
            _ => {
                let table = self.inner.table.as_ref().expect("table for non-closed-form warp");
                let density = |s: f64| self.density(s);
                let last = table.nodes.len() - 1;
                if r <= table.nodes[0] {
                    quad::gauss_kronrod(&density, 0.0, r).0
                } else if r <= table.nodes[last] {
                    let i = table.nodes.partition_point(|x| *x <= r) - 1;
                    table.volumes[i] + quad::gauss_kronrod(&density, table.nodes[i], r).0
                } else {
                    let dom = RadialDomain::new(table.nodes[last], r, []);
                    let extra = quad::integrate_radial(&density, &dom, QuadOptions::default())
                        .map(|q| q.value)
                        .unwrap_or(f64::NAN);
                    table.volumes[last] + extra
                }
            }
        }
    }

    /// Geodesic ball volume on the working range.
    pub fn ball_volume(&self, r: f64) -> Result<f64> {
        self.check_radius(r)?;
        Ok(self.volume(r))
    }

    /// Radius of the geodesic ball of volume `v`.
    pub fn inverse_volume(&self, v: f64) -> f64 {
        if v <= 0.0 {
            return 0.0;
        }
        let n = self.n() as i32;
        match &self.inner.warp {
            WarpFunction::Euclidean => (v / self.omega()).powf(1.0 / n as f64),
            WarpFunction::ExactCone { c } => {
                (v / (self.omega() * c.powi(n - 1))).powf(1.0 / n as f64)
            }
            _ => {
                // bracket then safeguarded Newton; V' = density
                let table = self.inner.table.as_ref().expect("table");
                let (mut lo, mut hi);
                let last = table.nodes.len() - 1;
                if v <= table.volumes[0] {
                    lo = 0.0;
                    hi = table.nodes[0];
                } else if v <= table.volumes[last] {
                    let i = table.volumes.partition_point(|x| *x < v);
                    lo = table.nodes[i - 1];
                    hi = table.nodes[i];
                } else {
                    lo = table.nodes[last];
                    hi = 2.0 * lo;
                    while self.volume(hi) < v {
                        lo = hi;
                        hi *= 2.0;
                    }
                }
                let mut r = 0.5 * (lo + hi);
                for _ in 0..100 {
                    let f = self.volume(r) - v;
                    if f > 0.0 {
                        hi = r;
                    } else {
                        lo = r;
                    }
                    let step = f / self.density(r);
                    let mut next = r - step;
                    if !(next > lo && next < hi) {
                        next = 0.5 * (lo + hi);
                    }
                    if (next - r).abs() <= 4.0 * f64::EPSILON * r || hi - lo <= 4.0 * f64::EPSILON * hi
                    {
                        return next;
                    }
                    r = next;
                }
                r
            }
        }
    }

    /// Bishop–Gromov ratio `V(r) / (ω_n r^n)`.
    pub fn volume_ratio(&self, r: f64) -> f64 {
        self.volume(r) / (self.omega() * r.powi(self.n() as i32))
    }

    /// Asymptotic volume ratio `θ = lim V(r) / (ω_n r^n)`.
    ///
    /// Closed form for the Euclidean model and the exact cone. Otherwise the
    /// ratio is probed at doubling radii past `r_max` and each probe pair is
    /// combined by one Richardson step for an `O(1/r)` remainder; converged
    /// once successive extrapolants agree to `1e-8` relative.
    pub fn avr(&self) -> Result<f64> {
        self.inner
            .theta
            .get_or_init(|| self.compute_avr())
            .clone()
            .map_err(Error::Convergence)
    }

    fn compute_avr(&self) -> std::result::Result<f64, String> {
        match &self.inner.warp {
            WarpFunction::Euclidean => return Ok(1.0),
            WarpFunction::ExactCone { c } => return Ok(c.powi(self.n() as i32 - 1)),
            _ => {}
        }
        let mut r = self.r_max().max(16.0 * self.inner.warp.scale());
        let mut f_prev = self.volume_ratio(r);
        let mut extrapolated: Option<f64> = None;
        for _ in 0..80 {
            r *= 2.0;
            let f = self.volume_ratio(r);
            let rich = 2.0 * f - f_prev;
            if !rich.is_finite() {
                break;
            }
            if let Some(prev) = extrapolated {
                if (rich - prev).abs() < 1e-8 * rich.abs() {
                    return if rich > 0.0 && rich <= 1.0 + 1e-10 {
                        Ok(rich.min(1.0))
                    } else {
                        Err(format!("volume ratio converged to {rich}, outside (0, 1]"))
                    };
                }
            }
            extrapolated = Some(rich);
            f_prev = f;
        }
        Err("volume ratio did not converge over the probe radii".into())
    }

    /// Laplacian of the distance function from the pole, `(n-1) φ'/φ`.
    pub fn laplacian_r(&self, r: f64) -> Result<f64> {
        let w = self.warp_eval(r)?;
        Ok((self.n() as f64 - 1.0) * w.dphi / w.phi)
    }

    /// Radial and tangential Ricci eigenvalues at `r`.
    pub fn ricci(&self, r: f64) -> (f64, f64) {
        let n = self.n() as f64;
        let w = self.inner.warp.eval(r);
        let oms = self.inner.warp.one_minus_slope(r);
        let radial = -(n - 1.0) * w.ddphi / w.phi;
        let tangential = -w.ddphi / w.phi + (n - 2.0) * oms * (1.0 + w.dphi) / (w.phi * w.phi);
        (radial, tangential)
    }

    /// Minimum of both Ricci eigenvalues over `grid`.
    pub fn ricci_check(&self, grid: &[f64]) -> RicciReport {
        let mut rep = RicciReport {
            min_radial: f64::INFINITY,
            argmin_radial: f64::NAN,
            min_tangential: f64::INFINITY,
            argmin_tangential: f64::NAN,
            nonnegative: true,
        };
        for &r in grid.iter().filter(|r| **r > 0.0 && **r <= self.r_max()) {
            let (rad, tan) = self.ricci(r);
            if rad < rep.min_radial {
                rep.min_radial = rad;
                rep.argmin_radial = r;
            }
            if tan < rep.min_tangential {
                rep.min_tangential = tan;
                rep.argmin_tangential = r;
            }
        }
        rep.nonnegative = rep.min_radial >= -RICCI_TOL && rep.min_tangential >= -RICCI_TOL;
        rep
    }

    /// Serializable description of this model.
    pub fn spec(&self) -> ManifoldSpec {
        let (kind, c, delta) = match &self.inner.warp {
            WarpFunction::Euclidean => (ManifoldKind::Euclidean, None, None),
            WarpFunction::SmoothedCone { c, delta } => (ManifoldKind::Cone, Some(*c), Some(*delta)),
            WarpFunction::ExactCone { c } => (ManifoldKind::ExactCone, Some(*c), None),
            WarpFunction::Tabulated(_) => (ManifoldKind::Tabulated, None, None),
        };
        ManifoldSpec {
            kind,
            n: self.n(),
            c,
            delta,
            r_max: Some(self.r_max()),
        }
    }
}

impl fmt::Display for ModelManifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.spec().label())
    }
}

const RICCI_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RicciReport {
    pub min_radial: f64,
    pub argmin_radial: f64,
    pub min_tangential: f64,
    pub argmin_tangential: f64,
    pub nonnegative: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifoldKind {
    Euclidean,
    Cone,
    ExactCone,
    Tabulated,
}

/// Manifold description as it appears in run configurations and reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldSpec {
    pub kind: ManifoldKind,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
}

pub const DEFAULT_R_MAX: f64 = 50.0;

impl ManifoldSpec {
    /// Parses the catalog syntax `euclidean`, `cone(c,delta)` or
    /// `exact_cone(c)`.
    pub fn parse_catalog(text: &str, n: usize, r_max: Option<f64>) -> Result<Self> {
        let t: String = text.chars().filter(|ch| !ch.is_whitespace()).collect();
        let args = |prefix: &str| -> Option<Vec<f64>> {
            let body = t.strip_prefix(prefix)?.strip_prefix('(')?.strip_suffix(')')?;
            body.split(',').map(|s| s.parse::<f64>().ok()).collect()
        };
        let bad = || Error::Config(format!("unknown manifold '{text}'; expected euclidean, cone(c,delta) or exact_cone(c)"));
        let spec = if t == "euclidean" {
            ManifoldSpec { kind: ManifoldKind::Euclidean, n, c: None, delta: None, r_max }
        } else if let Some(a) = args("exact_cone") {
            if a.len() != 1 {
                return Err(bad());
            }
            ManifoldSpec { kind: ManifoldKind::ExactCone, n, c: Some(a[0]), delta: None, r_max }
        } else if let Some(a) = args("cone") {
            if a.len() != 2 {
                return Err(bad());
            }
            ManifoldSpec { kind: ManifoldKind::Cone, n, c: Some(a[0]), delta: Some(a[1]), r_max }
        } else {
            return Err(bad());
        };
        Ok(spec)
    }

    pub fn build(&self) -> Result<ModelManifold> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| Error::Config(format!("{:?} manifold requires '{name}'", self.kind)))
        };
        match self.kind {
            ManifoldKind::Euclidean => {
                ModelManifold::euclidean(self.n, self.r_max.unwrap_or(DEFAULT_R_MAX))
            }
            ManifoldKind::Cone => {
                let c = need(self.c, "c")?;
                let delta = need(self.delta, "delta")?;
                let r_max = self.r_max.unwrap_or(DEFAULT_R_MAX * delta.max(1.0));
                ModelManifold::smoothed_cone(self.n, c, delta, r_max)
            }
            ManifoldKind::ExactCone => {
                let c = need(self.c, "c")?;
                ModelManifold::exact_cone(self.n, c, self.r_max.unwrap_or(DEFAULT_R_MAX))
            }
            ManifoldKind::Tabulated => Err(Error::Config(
                "tabulated warps cannot be built from a catalog spec".into(),
            )),
        }
    }

    /// Short stable label, e.g. `cone(0.5,1)/n=3`.
    pub fn label(&self) -> String {
        let body = match self.kind {
            ManifoldKind::Euclidean => "euclidean".to_string(),
            ManifoldKind::Cone => format!(
                "cone({},{})",
                self.c.unwrap_or(f64::NAN),
                self.delta.unwrap_or(f64::NAN)
            ),
            ManifoldKind::ExactCone => format!("exact_cone({})", self.c.unwrap_or(f64::NAN)),
            ManifoldKind::Tabulated => "tabulated".to_string(),
        };
        format!("{body}/n={}", self.n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn geometric(lo: f64, hi: f64, count: usize) -> Vec<f64> {
        let q = (hi / lo).powf(1.0 / (count - 1) as f64);
        (0..count).map(|i| lo * q.powi(i as i32)).collect()
    }

    #[test]
    fn unit_ball_volumes() {
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-15);
        assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn warp_eval_examples() {
        let e = ModelManifold::euclidean(3, 50.0).unwrap();
        assert_eq!(e.warp_eval(2.0).unwrap(), WarpValue { phi: 2.0, dphi: 1.0, ddphi: 0.0 });
        let c1 = ModelManifold::smoothed_cone(3, 1.0, 1.0, 50.0).unwrap();
        for r in [0.1, 1.0, 7.5] {
            let w = c1.warp_eval(r).unwrap();
            assert_eq!((w.phi, w.dphi, w.ddphi), (r, 1.0, 0.0));
        }
        let c = ModelManifold::smoothed_cone(3, 0.5, 1.0, 50.0).unwrap();
        let w = c.warp_eval(3.0).unwrap();
        // tanh(3) to 20 digits
        let tanh3 = 0.995_054_753_686_730_5_f64;
        assert!((w.phi - (1.5 + 0.5 * tanh3)).abs() < 1e-15);
        assert!(c.warp_eval(0.0).is_err());
        assert!(c.warp_eval(51.0).is_err());
    }

    #[test]
    fn ricci_of_flat_space_vanishes() {
        let e = ModelManifold::euclidean(4, 10.0).unwrap();
        let rep = e.ricci_check(&geometric(1e-3, 10.0, 200));
        assert_eq!(rep.min_radial, 0.0);
        assert_eq!(rep.min_tangential, 0.0);
        assert!(rep.nonnegative);
    }

    #[test]
    fn ricci_of_smoothed_cone_is_nonnegative() {
        let m = ModelManifold::smoothed_cone(3, 0.5, 1.0, 50.0).unwrap();
        let coarse = geometric(50e-6, 50.0, 400);
        assert!(m.ricci_check(&coarse).nonnegative);
        // closed forms on a 10x finer grid
        for r in geometric(50e-6, 50.0, 4000) {
            let th = r.tanh();
            let s2 = 1.0 - th * th;
            let phi = 0.5 * r + 0.5 * th;
            let dphi = 0.5 + 0.5 * s2;
            let ddphi = -s2 * th;
            let rad = -2.0 * ddphi / phi;
            let tan = -ddphi / phi + (1.0 - dphi * dphi) / (phi * phi);
            assert!(rad >= 0.0 && tan >= -1e-9, "r = {r}: {rad} {tan}");
        }
    }

    #[test]
    fn ricci_reports_convex_warp() {
        // φ'' > 0 on the second cell
        let warp = TabulatedWarp {
            grid: vec![0.0, 1.0, 2.0, 3.0],
            values: vec![0.0, 1.0, 2.2, 3.6],
            first: vec![1.0, 1.0, 1.3, 1.4],
            second: vec![0.0, 0.0, 0.5, 0.0],
        };
        let m = ModelManifold::new(3, WarpFunction::Tabulated(warp), 3.0).unwrap();
        let rep = m.ricci_check(&geometric(0.01, 3.0, 300));
        assert!(!rep.nonnegative);
        assert!(rep.min_radial < 0.0);
        assert!((rep.argmin_radial - 2.0).abs() < 0.25, "{}", rep.argmin_radial);
    }

    #[test]
    fn ball_volume_closed_forms() {
        let e = ModelManifold::euclidean(3, 5.0).unwrap();
        assert!((e.ball_volume(1.0).unwrap() - 4.0 * PI / 3.0).abs() < 1e-14);
        let cone = ModelManifold::exact_cone(4, 0.6, 5.0).unwrap();
        let want = unit_ball_volume(4) * 0.6f64.powi(3) * 2f64.powi(4);
        assert!((cone.ball_volume(2.0).unwrap() - want).abs() < 1e-12 * want);
        assert!(cone.is_vertex_singular());
    }

    #[test]
    fn ball_volume_matches_trapezoid_oracle() {
        let m = ModelManifold::smoothed_cone(3, 0.5, 1.0, 50.0).unwrap();
        let v = m.ball_volume(2.0).unwrap();
        // composite trapezoid with one Richardson step, 2^20 panels
        let f = |s: f64| {
            let p = 0.5 * s + 0.5 * s.tanh();
            4.0 * PI * p * p
        };
        let trap = |k: u32| {
            let m = 1usize << k;
            let h = 2.0 / m as f64;
            let mut acc = 0.5 * (f(0.0) + f(2.0));
            for i in 1..m {
                acc += f(i as f64 * h);
            }
            acc * h
        };
        let oracle = (4.0 * trap(20) - trap(19)) / 3.0;
        assert!((v - oracle).abs() < 1e-10 * oracle, "{v} vs {oracle}");
    }

    #[test]
    fn inverse_volume_roundtrip() {
        let m = ModelManifold::smoothed_cone(4, 0.7, 2.0, 100.0).unwrap();
        for r in [1e-5, 0.3, 4.0, 99.0, 250.0] {
            let back = m.inverse_volume(m.volume(r));
            assert!((back - r).abs() < 1e-12 * r, "{r} -> {back}");
        }
    }

    #[test]
    fn avr_examples() {
        assert_eq!(ModelManifold::euclidean(3, 50.0).unwrap().avr().unwrap(), 1.0);
        let m = ModelManifold::smoothed_cone(3, 0.5, 1.0, 50.0).unwrap();
        assert!((m.avr().unwrap() - 0.25).abs() < 1e-6);
        let m = ModelManifold::smoothed_cone(4, 0.8, 2.0, 100.0).unwrap();
        assert!((m.avr().unwrap() - 0.512).abs() < 1e-6);
        let m = ModelManifold::smoothed_cone(3, 1.0, 1.0, 50.0).unwrap();
        assert!((m.avr().unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn laplacian_examples() {
        let e = ModelManifold::euclidean(3, 50.0).unwrap();
        assert_eq!(e.laplacian_r(2.0).unwrap(), 1.0);
        let m = ModelManifold::smoothed_cone(3, 0.5, 1.0, 50.0).unwrap();
        for r in geometric(50e-6, 50.0, 2000) {
            assert!(r * m.laplacian_r(r).unwrap() <= 2.0 + 1e-12);
        }
        let near = 1e-7 * m.laplacian_r(1e-7).unwrap();
        assert!((near - 2.0).abs() < 1e-9);
    }

    #[test]
    fn catalog_parsing() {
        let s = ManifoldSpec::parse_catalog("cone(0.5, 1)", 3, None).unwrap();
        assert_eq!(s.kind, ManifoldKind::Cone);
        assert_eq!(s.label(), "cone(0.5,1)/n=3");
        let m = s.build().unwrap();
        assert_eq!(m.r_max(), 50.0);
        assert!(ManifoldSpec::parse_catalog("sphere", 3, None).is_err());
        assert!(ModelManifold::euclidean(2, 1.0).is_err());
        assert!(ModelManifold::smoothed_cone(3, 1.5, 1.0, 1.0).is_err());
    }
}

use std::fmt;
use std::io::{BufRead, Write};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::manifold::ModelManifold;

use super::family::ProfileFamily;
use super::grid::RadialGrid;

/// A radial function `u(r)` with its derivative, evaluable anywhere.
pub trait RadialFunction: Send + Sync {
    /// `(u(r), u'(r))`.
    fn eval(&self, r: f64) -> (f64, f64);

    /// `(inner, outer)` radii of the support; `outer` may be infinite.
    fn support(&self) -> (f64, f64);

    /// Radii where the function changes character.
    fn features(&self) -> Vec<f64> {
        Vec::new()
    }
}

struct FamilyShape {
    family: ProfileFamily,
    n: usize,
}

impl RadialFunction for FamilyShape {
    fn eval(&self, r: f64) -> (f64, f64) {
        self.family.eval(self.n, r)
    }
    fn support(&self) -> (f64, f64) {
        self.family.support()
    }
    fn features(&self) -> Vec<f64> {
        self.family.features()
    }
}

/// Cubic Hermite interpolant through `(r_i, u_i, u'_i)`; constant below the
/// first node, zero beyond the last.
#[derive(Debug, Clone)]
pub struct HermiteTable {
    r: Vec<f64>,
    u: Vec<f64>,
    du: Vec<f64>,
}

impl HermiteTable {
    pub fn new(r: Vec<f64>, u: Vec<f64>, du: Vec<f64>) -> Result<Self> {
        if r.len() < 3 || u.len() != r.len() || du.len() != r.len() {
            return Err(Error::Parameter("tabulated profile needs at least 3 samples".into()));
        }
        if r[0] < 0.0 || r.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Parameter(
                "tabulated profile radii must be nonnegative and strictly increasing".into(),
            ));
        }
        Ok(HermiteTable { r, u, du })
    }

    /// Derivatives by centred differences, one-sided second-order stencils at
    /// the ends.
    pub fn from_samples(r: Vec<f64>, u: Vec<f64>) -> Result<Self> {
        let len = r.len();
        if len < 3 || u.len() != len {
            return Err(Error::Parameter("tabulated profile needs at least 3 samples".into()));
        }
        let mut du = vec![0.0; len];
        for i in 0..len {
            let (a, b, c) = if i == 0 {
                (0, 1, 2)
            } else if i == len - 1 {
                (len - 3, len - 2, len - 1)
            } else {
                (i - 1, i, i + 1)
            };
            // derivative at r[i] of the parabola through three samples
            let (x0, x1, x2) = (r[a], r[b], r[c]);
            let x = r[i];
            du[i] = u[a] * ((x - x1) + (x - x2)) / ((x0 - x1) * (x0 - x2))
                + u[b] * ((x - x0) + (x - x2)) / ((x1 - x0) * (x1 - x2))
                + u[c] * ((x - x0) + (x - x1)) / ((x2 - x0) * (x2 - x1));
        }
        Self::new(r, u, du)
    }
}

impl RadialFunction for HermiteTable {
    fn eval(&self, r: f64) -> (f64, f64) {
        let last = self.r.len() - 1;
        if r <= self.r[0] {
            return (self.u[0], 0.0);
        }
        if r >= self.r[last] {
            return (0.0, 0.0);
        }
        let i = self.r.partition_point(|x| *x <= r) - 1;
        let h = self.r[i + 1] - self.r[i];
        let t = (r - self.r[i]) / h;
        let (y0, y1) = (self.u[i], self.u[i + 1]);
        let (m0, m1) = (self.du[i] * h, self.du[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let u = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1;
        let du = ((6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * m1)
            / h;
        (u, du)
    }

    fn support(&self) -> (f64, f64) {
        (0.0, *self.r.last().unwrap())
    }

    fn features(&self) -> Vec<f64> {
        self.r.iter().copied().filter(|r| *r > 0.0).collect()
    }
}

/// A compactly supported radial profile sampled on a grid, backed by an exact
/// evaluator.
#[derive(Clone)]
pub struct RadialProfile {
    grid: RadialGrid,
    values: Vec<f64>,
    derivatives: Vec<f64>,
    support: (f64, f64),
    source: Arc<dyn RadialFunction>,
    scale: f64,
    tag: String,
    family: Option<ProfileFamily>,
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialProfile")
            .field("tag", &self.tag)
            .field("support", &self.support)
            .field("scale", &self.scale)
            .field("nodes", &self.grid.len())
            .finish()
    }
}

impl RadialProfile {
    /// Samples `source` on `grid`. The support must be finite.
    pub fn from_function(
        source: Arc<dyn RadialFunction>,
        grid: RadialGrid,
        tag: impl Into<String>,
    ) -> Result<Self> {
        let support = source.support();
        if !support.1.is_finite() {
            return Err(Error::Parameter("radial profiles must be compactly supported".into()));
        }
        let (values, derivatives) = grid.nodes().iter().map(|&r| source.eval(r)).unzip();
        Ok(RadialProfile {
            grid,
            values,
            derivatives,
            support,
            source,
            scale: 1.0,
            tag: tag.into(),
            family: None,
        })
    }

    /// Two-column `(r, u)` samples; the last sample must vanish.
    pub fn from_samples(r: Vec<f64>, u: Vec<f64>, tag: impl Into<String>) -> Result<Self> {
        let max = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if u.last().is_none_or(|v| v.abs() > 1e-12 * max.max(f64::MIN_POSITIVE)) {
            return Err(Error::Parameter(
                "tabulated profile must vanish at its last sample (compact support)".into(),
            ));
        }
        let first_positive = r.iter().copied().find(|x| *x > 0.0).unwrap_or(1.0);
        let r_end = *r.last().unwrap_or(&1.0);
        let table = HermiteTable::from_samples(r, u)?;
        let grid = RadialGrid::geometric(first_positive.min(1e-6 * r_end), r_end, super::grid::DEFAULT_NODES)?;
        Self::from_function(Arc::new(table), grid, tag)
    }

    /// Reads whitespace-separated `(r, u)` lines; `#` starts a comment.
    pub fn read_two_column<R: BufRead>(reader: R, tag: impl Into<String>) -> Result<Self> {
        let mut rs = Vec::new();
        let mut us = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let cols: Vec<&str> = body.split_whitespace().collect();
            let parse = |s: &str, col: usize| {
                s.parse::<f64>().map_err(|e| Error::Parse {
                    line: lineno + 1,
                    column: col,
                    message: e.to_string(),
                })
            };
            if cols.len() != 2 {
                return Err(Error::Parse {
                    line: lineno + 1,
                    column: 1,
                    message: format!("expected two columns, found {}", cols.len()),
                });
            }
            rs.push(parse(cols[0], 1)?);
            us.push(parse(cols[1], 2)?);
        }
        Self::from_samples(rs, us, tag)
    }

    /// Writes `(r, u)` on the profile grid, one pair per line.
    pub fn write_two_column<W: Write>(&self, mut w: W) -> Result<()> {
        for (r, u) in self.grid.nodes().iter().zip(self.values()) {
            writeln!(w, "{r:.17e} {u:.17e}")?;
        }
        Ok(())
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    /// Samples `u(r_i)` on the grid.
    pub fn values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v * self.scale).collect()
    }

    /// Samples `u'(r_i)` on the grid.
    pub fn derivatives(&self) -> Vec<f64> {
        self.derivatives.iter().map(|v| v * self.scale).collect()
    }

    pub fn support_radius(&self) -> f64 {
        self.support.1
    }

    /// Inner radius of the support; 0 unless the profile vanishes near the pole.
    pub fn inner_radius(&self) -> f64 {
        self.support.0
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn family(&self) -> Option<&ProfileFamily> {
        self.family.as_ref()
    }

    /// `λ u`.
    pub fn scaled(&self, lambda: f64) -> RadialProfile {
        let mut p = self.clone();
        p.scale *= lambda;
        p.tag = format!("{}*{}", lambda, self.tag);
        p
    }

    /// `max |u|` over the grid samples.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs())) * self.scale.abs()
    }

    pub fn value(&self, r: f64) -> f64 {
        self.eval(r).0
    }
}

impl RadialFunction for RadialProfile {
    fn eval(&self, r: f64) -> (f64, f64) {
        let (u, du) = self.source.eval(r);
        (u * self.scale, du * self.scale)
    }

    fn support(&self) -> (f64, f64) {
        self.support
    }

    fn features(&self) -> Vec<f64> {
        self.source.features()
    }
}

/// Samples a family member on `grid` for the model `m`.
pub fn materialize(
    family: &ProfileFamily,
    m: &ModelManifold,
    grid: &RadialGrid,
) -> Result<RadialProfile> {
    family.validate(m.n())?;
    let (_, outer) = family.support();
    if outer > 0.5 * m.r_max() {
        return Err(Error::Config(format!(
            "{family} is supported up to r = {outer}, beyond r_max/2 = {}",
            0.5 * m.r_max()
        )));
    }
    let shape = FamilyShape {
        family: family.clone(),
        n: m.n(),
    };
    let mut p = RadialProfile::from_function(Arc::new(shape), grid.clone(), family.to_string())?;
    p.family = Some(family.clone());
    Ok(p)
}

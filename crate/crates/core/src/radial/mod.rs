//! Radial profiles and integration against a model's volume density.

pub mod family;
pub mod grid;
pub mod profile;
pub mod quad;

pub use family::ProfileFamily;
pub use grid::RadialGrid;
pub use profile::{materialize, HermiteTable, RadialFunction, RadialProfile};
pub use quad::{QuadOptions, QuadResult, RadialDomain};

use crate::error::Result;
use crate::manifold::ModelManifold;

/// `∫_M f(r) dV = n ω_n ∫_0^{r_max} f(r) φ(r)^{n-1} dr`.
pub fn integrate<F: Fn(f64) -> f64>(m: &ModelManifold, f: F) -> Result<QuadResult> {
    integrate_on(m, f, &RadialDomain::new(0.0, m.r_max(), []), QuadOptions::default())
}

/// As [`integrate`], restricted to a radial domain (clipped to `r_max`).
pub fn integrate_on<F: Fn(f64) -> f64>(
    m: &ModelManifold,
    f: F,
    domain: &RadialDomain,
    opts: QuadOptions,
) -> Result<QuadResult> {
    let domain = RadialDomain {
        inner: domain.inner,
        outer: domain.outer.min(m.r_max()),
        features: domain.features.clone(),
    };
    let g = |r: f64| {
        let v = f(r);
        if v == 0.0 {
            0.0
        } else {
            v * m.density(r)
        }
    };
    let res = quad::integrate_radial(&g, &domain, opts)?;
    quad::accept(res, "radial integral")
}

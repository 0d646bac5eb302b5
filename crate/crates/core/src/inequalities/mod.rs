//! Checks of the θ-weighted inequalities and of the identities behind them.
//! Each check evaluates both sides independently and reports a signed
//! deficit with a tolerance derived from the quadrature error estimates.

mod report;

use std::sync::Arc;

use serde::Serialize;

use crate::constants::{check_ckn, hardy_constant, hpw_constant, ConstantCache, SearchSettings};
use crate::error::{Error, Result};
use crate::functionals::{
    grad_integral, integral, lp_integral, weighted_grad, weighted_lp, FunctionalValue, Monotonicity,
    WeightSpec,
};
use crate::manifold::ModelManifold;
use crate::radial::{RadialFunction, RadialProfile};
use crate::rearrange::rearrange;

pub use report::{InequalityReport, Relation, Tolerances};
use report::Draft;

/// Hardy–Sobolev exponents: `1 < p < n`, `0 ≤ s ≤ p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HsParams {
    pub p: f64,
    pub s: f64,
}

impl HsParams {
    pub fn new(n: usize, p: f64, s: f64) -> Result<Self> {
        if !(p > 1.0 && p < n as f64) || !(0.0..=p).contains(&s) {
            return Err(Error::Parameter(format!(
                "Hardy-Sobolev inequality requires 1 < p < n and 0 <= s <= p (got p = {p}, s = {s}, n = {n})"
            )));
        }
        Ok(HsParams { p, s })
    }

    /// `q = p(n-s)/(n-p)`.
    pub fn q(&self, n: usize) -> f64 {
        let nf = n as f64;
        self.p * (nf - self.s) / (nf - self.p)
    }

    /// `(n-p)/(n-s)`.
    pub fn outer_exponent(&self, n: usize) -> f64 {
        let nf = n as f64;
        (nf - self.p) / (nf - self.s)
    }
}

/// CKN weights `r^{-2a}` on the gradient and `r^{-bp}` on `|u|^p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CknParams {
    pub a: f64,
    pub b: f64,
}

impl CknParams {
    /// Validates `0 ≤ a < ((n-2)/2)(1-√(1-θ^{2/n}))` and `a ≤ b ≤ a+1`.
    pub fn new(n: usize, a: f64, b: f64, theta: f64) -> Result<Self> {
        check_ckn(n, a, b, theta)?;
        Ok(CknParams { a, b })
    }

    /// `p = 2n/(n-2+2(b-a))`.
    pub fn p(&self, n: usize) -> f64 {
        let nf = n as f64;
        2.0 * nf / (nf - 2.0 + 2.0 * (self.b - self.a))
    }

    /// `s = p(b-a)`.
    pub fn s(&self, n: usize) -> f64 {
        self.p(n) * (self.b - self.a)
    }

    /// `γ = a(n-2-a)`.
    pub fn gamma(&self, n: usize) -> f64 {
        self.a * (n as f64 - 2.0 - self.a)
    }
}

/// `u*` together with the Euclidean model it lives on.
pub struct Rearrangement {
    pub ustar: RadialProfile,
    pub euclidean: ModelManifold,
}

impl Rearrangement {
    pub fn new(u: &RadialProfile, m: &ModelManifold) -> Result<Self> {
        Ok(Rearrangement {
            ustar: rearrange(u, m)?,
            euclidean: m.euclidean_companion(),
        })
    }
}

/// Outcome of sampling `V(r)/(ω_n r^n)` at increasing radii.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub radii: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Largest `ratio_{i+1}/ratio_i`, with the value 1 at the pole prepended.
    pub max_step_ratio: f64,
    pub nonincreasing: bool,
    pub bounded_by_one: bool,
    pub pass: bool,
}

fn require_regular<U: RadialFunction + ?Sized>(u: &U, m: &ModelManifold) -> Result<()> {
    if m.is_vertex_singular() && u.support().0 == 0.0 {
        return Err(Error::Precondition(
            "the exact cone is singular at its vertex; profiles must vanish near r = 0".into(),
        ));
    }
    Ok(())
}

fn rel(values: &[FunctionalValue]) -> f64 {
    values.iter().map(FunctionalValue::rel_error).sum()
}

/// Runs checks with a shared tolerance policy and constant cache.
pub struct Checker {
    pub tolerances: Tolerances,
    pub constants: Arc<ConstantCache>,
}

impl Default for Checker {
    fn default() -> Self {
        Checker::new(Tolerances::default(), SearchSettings::default())
    }
}

impl Checker {
    pub fn new(tolerances: Tolerances, search: SearchSettings) -> Self {
        Checker {
            tolerances,
            constants: Arc::new(ConstantCache::new(search)),
        }
    }

    fn finish(&self, d: Draft, m: &ModelManifold, u_tag: &str) -> Result<InequalityReport> {
        Ok(d.finish(m, m.avr()?, u_tag, &self.tolerances))
    }

    /// `‖Du‖_{L^p(M)} ≥ θ^{1/n} ‖Du*‖_{L^p(R^n)}`.
    pub fn polya_szego(&self, u: &RadialProfile, m: &ModelManifold, p: f64) -> Result<InequalityReport> {
        let r = Rearrangement::new(u, m)?;
        self.polya_szego_with(u, m, &r, p)
    }

    pub fn polya_szego_with(
        &self,
        u: &RadialProfile,
        m: &ModelManifold,
        r: &Rearrangement,
        p: f64,
    ) -> Result<InequalityReport> {
        require_regular(u, m)?;
        let theta = m.avr()?;
        let gu = grad_integral(u, m, p)?.powf(1.0 / p);
        let gs = grad_integral(&r.ustar, &r.euclidean, p)?.powf(1.0 / p);
        let factor = theta.powf(1.0 / m.n() as f64);
        self.finish(
            Draft {
                name: "polya_szego",
                params: vec![("p", p)],
                relation: Relation::AtLeast,
                constant: factor,
                lhs: gs.value,
                rhs: gu.value,
                rel_error: rel(&[gu, gs]),
                extra_rel: 0.0,
                details: vec![],
            },
            m,
            u.tag(),
        )
    }

    /// `∫_M |u|^p w ≤ ∫_{R^n} (u*)^p w` for nonincreasing `w`, reversed for
    /// increasing `w`, equality for constant `w`.
    pub fn sym_lemma(&self, u: &RadialProfile, m: &ModelManifold, w: &WeightSpec, p: f64) -> Result<InequalityReport> {
        let mono = w
            .monotonicity()
            .ok_or_else(|| Error::UnsupportedWeight(format!("weight {w} is not monotone")))?;
        let r = Rearrangement::new(u, m)?;
        self.sym_lemma_checked(u, m, &r, w, mono, p)
    }

    pub fn sym_lemma_with(
        &self,
        u: &RadialProfile,
        m: &ModelManifold,
        r: &Rearrangement,
        w: &WeightSpec,
        p: f64,
    ) -> Result<InequalityReport> {
        let mono = w
            .monotonicity()
            .ok_or_else(|| Error::UnsupportedWeight(format!("weight {w} is not monotone")))?;
        self.sym_lemma_checked(u, m, r, w, mono, p)
    }

    fn sym_lemma_checked(
        &self,
        u: &RadialProfile,
        m: &ModelManifold,
        r: &Rearrangement,
        w: &WeightSpec,
        mono: Monotonicity,
        p: f64,
    ) -> Result<InequalityReport> {
        require_regular(u, m)?;
        let on_m = weighted_lp(u, m, w, p)?;
        let on_rn = weighted_lp(&r.ustar, &r.euclidean, w, p)?;
        let (lhs, rhs, relation) = match mono {
            Monotonicity::Nonincreasing => (on_m.value, on_rn.value, Relation::AtLeast),
            Monotonicity::Increasing => (on_rn.value, on_m.value, Relation::AtLeast),
            Monotonicity::Constant => (on_m.value, on_rn.value, Relation::Equal),
        };
        let mut params = vec![("p", p)];
        match w {
            WeightSpec::Constant => params.push(("weight_exponent", 0.0)),
            WeightSpec::Power { exponent } => params.push(("weight_exponent", *exponent)),
            WeightSpec::Terms { .. } => {}
        }
        self.finish(
            Draft {
                name: "sym_lemma",
                params,
                relation,
                constant: 1.0,
                lhs,
                rhs,
                rel_error: rel(&[on_m, on_rn]),
                extra_rel: 0.0,
                details: vec![("integral_m", on_m.value), ("integral_rn", on_rn.value)],
            },
            m,
            u.tag(),
        )
    }

    /// `∫_M |Du|^p ≥ θ^{p/n} ((n-p)/p)^p ∫_M |u|^p / r^p`.
    pub fn hardy(&self, u: &RadialProfile, m: &ModelManifold, p: f64) -> Result<InequalityReport> {
        require_regular(u, m)?;
        let n = m.n();
        let h = hardy_constant(n, p)?;
        let theta = m.avr()?;
        let grad = grad_integral(u, m, p)?;
        let weighted = weighted_lp(u, m, &WeightSpec::power(-p), p)?;
        self.finish(
            Draft {
                name: "hardy",
                params: vec![("p", p)],
                relation: Relation::AtLeast,
                constant: theta.powf(p / n as f64) * h,
                lhs: weighted.value,
                rhs: grad.value,
                rel_error: rel(&[grad, weighted]),
                extra_rel: 0.0,
                details: vec![("euclidean_constant", h)],
            },
            m,
            u.tag(),
        )
    }

    /// `(∫_M r²u²)(∫_M |Du|²) ≥ θ^{2/n} (n²/4) (∫_M u²)²`.
    pub fn hpw(&self, u: &RadialProfile, m: &ModelManifold) -> Result<InequalityReport> {
        require_regular(u, m)?;
        let n = m.n();
        let theta = m.avr()?;
        let moment = weighted_lp(u, m, &WeightSpec::power(2.0), 2.0)?;
        let grad = grad_integral(u, m, 2.0)?;
        let l2 = lp_integral(u, m, 2.0)?;
        self.finish(
            Draft {
                name: "hpw",
                params: vec![],
                relation: Relation::AtLeast,
                constant: theta.powf(2.0 / n as f64) * hpw_constant(n),
                lhs: l2.value * l2.value,
                rhs: moment.value * grad.value,
                rel_error: rel(&[moment, grad, l2, l2]),
                extra_rel: 0.0,
                details: vec![("second_moment", moment.value), ("gradient_energy", grad.value)],
            },
            m,
            u.tag(),
        )
    }

    /// `∫_M |Du|^p ≥ θ^{p/n} C_HS(s,p) (∫_M |u|^q r^{-s})^{(n-p)/(n-s)}`.
    pub fn hardy_sobolev(&self, u: &RadialProfile, m: &ModelManifold, hs: &HsParams) -> Result<InequalityReport> {
        require_regular(u, m)?;
        let n = m.n();
        let hs = HsParams::new(n, hs.p, hs.s)?;
        let theta = m.avr()?;
        let c = self.constants.chs(n, hs.p, hs.s)?;
        let grad = grad_integral(u, m, hs.p)?;
        let weighted = weighted_lp(u, m, &WeightSpec::power(-hs.s), hs.q(n))?.powf(hs.outer_exponent(n));
        self.finish(
            Draft {
                name: "hardy_sobolev",
                params: vec![("p", hs.p), ("s", hs.s)],
                relation: Relation::AtLeast,
                constant: theta.powf(hs.p / n as f64) * c.value,
                lhs: weighted.value,
                rhs: grad.value,
                rel_error: rel(&[grad, weighted]),
                extra_rel: c.rel_width(),
                details: vec![
                    ("c_hs", c.value),
                    ("c_hs_lower", c.bracket.0),
                    ("c_hs_upper", c.bracket.1),
                ],
            },
            m,
            u.tag(),
        )
    }

    /// `∫_M r^{-2a}|Du|² ≥ C(a,b,θ) (∫_M r^{-bp}|u|^p)^{2/p}`, plus the
    /// intermediate bound `∫_M r^{-2a}|Du|² ≥ (1 - 4γθ^{-2/n}/(n-2)²) ∫_M |Dw|²`
    /// for `w = u r^{-a}`. Both must hold for the report to pass.
    pub fn ckn(&self, u: &RadialProfile, m: &ModelManifold, ck: &CknParams) -> Result<InequalityReport> {
        require_regular(u, m)?;
        let n = m.n();
        let nf = n as f64;
        let theta = m.avr()?;
        let ck = CknParams::new(n, ck.a, ck.b, theta)?;
        let (a, p) = (ck.a, ck.p(n));
        let c = self.constants.ckn(n, ck.a, ck.b, theta)?;
        let grad = weighted_grad(u, m, &WeightSpec::power(-2.0 * a), 2.0)?;
        let weighted = weighted_lp(u, m, &WeightSpec::power(-ck.b * p), p)?.powf(2.0 / p);

        // w = u r^{-a}
        let dw = integral(u, m, |r, v, d| {
            let ra = r.powf(-a);
            let wd = d * ra - a * v * ra / r;
            wd * wd
        })?;
        let factor = 1.0 - 4.0 * ck.gamma(n) * theta.powf(-2.0 / nf) / ((nf - 2.0) * (nf - 2.0));
        let chain_deficit = grad.value - factor * dw.value;
        let chain_tol = (self.tolerances.quad_factor * rel(&[grad, dw])).max(self.tolerances.rel_floor)
            * grad.value.abs().max(factor.abs() * dw.value);
        let chain_ok = factor > 0.0 && chain_deficit >= -chain_tol;

        let mut report = self.finish(
            Draft {
                name: "ckn",
                params: vec![("a", a), ("b", ck.b)],
                relation: Relation::AtLeast,
                constant: c.value,
                lhs: weighted.value,
                rhs: grad.value,
                rel_error: rel(&[grad, weighted]),
                extra_rel: c.rel_width(),
                details: vec![
                    ("p", p),
                    ("s", ck.s(n)),
                    ("gamma", ck.gamma(n)),
                    ("chain_factor", factor),
                    ("chain_gradient_w", dw.value),
                    ("chain_deficit", chain_deficit),
                    ("chain_pass", if chain_ok { 1.0 } else { 0.0 }),
                ],
            },
            m,
            u.tag(),
        )?;
        report.pass &= chain_ok;
        Ok(report)
    }

    /// `∫_M |D(w r^a)|² r^{-2a} = ∫_M |Dw|² + ∫_M a(a+1-rΔr) w²/r²` for `w`
    /// supported away from the pole. The left side differentiates the
    /// product directly; the right side uses the model's `Δr`.
    pub fn ckn_ibp(&self, w: &RadialProfile, m: &ModelManifold, a: f64) -> Result<InequalityReport> {
        if w.inner_radius() <= 0.0 && a != 0.0 {
            return Err(Error::Precondition(
                "the integration-by-parts identity needs w supported away from r = 0".into(),
            ));
        }
        let n = m.n() as f64;
        let left = integral(w, m, |r, v, d| {
            let ra = r.powf(a);
            let prod = d * ra + a * v * ra / r;
            prod * prod * r.powf(-2.0 * a)
        })?;
        let grad = grad_integral(w, m, 2.0)?;
        let potential = integral(w, m, |r, v, _| {
            let r_lap = r * m.laplacian_r(r).unwrap_or(f64::NAN);
            a * (a + 1.0 - r_lap) * v * v / (r * r)
        })?;
        let right = grad.value + potential.value;
        let mut details = vec![
            ("gradient_w", grad.value),
            ("potential", potential.value),
        ];
        if m.is_euclidean() {
            let hardy_term = weighted_lp(w, m, &WeightSpec::power(-2.0), 2.0)?;
            let closed = grad.value + a * (a + 2.0 - n) * hardy_term.value;
            details.push(("closed_form_rhs", closed));
            details.push(("closed_form_mismatch", (closed - left.value).abs() / left.value.abs()));
        }
        // the potential can cancel most of the gradient term; its error is
        // measured against the left side
        let err = left.rel_error()
            + (grad.quadrature_error + potential.quadrature_error) / left.value.abs().max(f64::MIN_POSITIVE);
        self.finish(
            Draft {
                name: "ckn_ibp",
                params: vec![("a", a)],
                relation: Relation::Equal,
                constant: 1.0,
                lhs: left.value,
                rhs: right,
                rel_error: err,
                extra_rel: 0.0,
                details,
            },
            m,
            w.tag(),
        )
    }

    /// `V(r)/(ω_n r^n)` is nonincreasing across `radii` and at most 1.
    pub fn bishop_gromov(&self, m: &ModelManifold, radii: &[f64]) -> Result<MonotonicityReport> {
        bishop_gromov_check(m, radii)
    }
}

pub fn bishop_gromov_check(m: &ModelManifold, radii: &[f64]) -> Result<MonotonicityReport> {
    if radii.is_empty() || radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] <= 0.0 {
        return Err(Error::Parameter("radii must be positive and strictly increasing".into()));
    }
    let mut ratios = Vec::with_capacity(radii.len());
    for &r in radii {
        ratios.push(m.ball_volume(r)? / (m.omega() * r.powi(m.n() as i32)));
    }
    let tol = 1e-12;
    let mut prev = 1.0;
    let mut max_step_ratio = 0.0f64;
    for &q in &ratios {
        max_step_ratio = max_step_ratio.max(q / prev);
        prev = q;
    }
    let nonincreasing = ratios.windows(2).all(|w| w[1] <= w[0] * (1.0 + tol));
    let bounded_by_one = ratios.iter().all(|q| *q <= 1.0 + tol);
    Ok(MonotonicityReport {
        radii: radii.to_vec(),
        ratios,
        max_step_ratio,
        nonincreasing,
        bounded_by_one,
        pass: nonincreasing && bounded_by_one,
    })
}

impl MonotonicityReport {
    /// As an [`InequalityReport`]: `1 ≥ max_i ratio_{i+1}/ratio_i`.
    pub fn to_report(&self, m: &ModelManifold) -> Result<InequalityReport> {
        let tol = Tolerances::default();
        let r_last = *self.radii.last().unwrap_or(&0.0);
        let mut report = Draft {
            name: "bishop_gromov",
            params: vec![("points", self.radii.len() as f64), ("r_last", r_last)],
            relation: Relation::AtLeast,
            constant: 1.0,
            lhs: self.max_step_ratio,
            rhs: 1.0,
            rel_error: 0.0,
            extra_rel: 0.0,
            details: vec![
                ("ratio_first", self.ratios.first().copied().unwrap_or(f64::NAN)),
                ("ratio_last", self.ratios.last().copied().unwrap_or(f64::NAN)),
            ],
        }
        .finish(m, m.avr()?, "-", &tol);
        report.pass = self.pass;
        Ok(report)
    }
}

pub fn polya_szego_check(u: &RadialProfile, m: &ModelManifold, p: f64) -> Result<InequalityReport> {
    Checker::default().polya_szego(u, m, p)
}

pub fn sym_lemma_check(u: &RadialProfile, m: &ModelManifold, w: &WeightSpec, p: f64) -> Result<InequalityReport> {
    Checker::default().sym_lemma(u, m, w, p)
}

pub fn hardy_check(u: &RadialProfile, m: &ModelManifold, p: f64) -> Result<InequalityReport> {
    Checker::default().hardy(u, m, p)
}

pub fn hpw_check(u: &RadialProfile, m: &ModelManifold) -> Result<InequalityReport> {
    Checker::default().hpw(u, m)
}

pub fn hardy_sobolev_check(u: &RadialProfile, m: &ModelManifold, hs: &HsParams) -> Result<InequalityReport> {
    Checker::default().hardy_sobolev(u, m, hs)
}

pub fn ckn_check(u: &RadialProfile, m: &ModelManifold, ck: &CknParams) -> Result<InequalityReport> {
    Checker::default().ckn(u, m, ck)
}

pub fn ckn_ibp_check(w: &RadialProfile, m: &ModelManifold, a: f64) -> Result<InequalityReport> {
    Checker::default().ckn_ibp(w, m, a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::{materialize, ProfileFamily, RadialGrid};

    fn profile(m: &ModelManifold, f: ProfileFamily) -> RadialProfile {
        materialize(&f, m, &RadialGrid::default_for(m).unwrap()).unwrap()
    }

    #[test]
    fn polya_szego_equality_on_euclidean() {
        let m = ModelManifold::euclidean(3, 50.0).unwrap();
        let u = profile(&m, ProfileFamily::Gaussian { alpha: 1.0 });
        let r = polya_szego_check(&u, &m, 2.0).unwrap();
        assert!(r.pass);
        assert!(r.deficit.abs() < 1e-7 * r.rhs, "{r:?}");
    }

    #[test]
    fn hardy_constant_on_cone() {
        let m = ModelManifold::smoothed_cone(4, 0.6, 1.0, 50.0).unwrap();
        let u = profile(&m, ProfileFamily::Bump { radius: 3.0, k: 3.0 });
        let r = hardy_check(&u, &m, 2.0).unwrap();
        assert!((r.constant - 0.216f64.sqrt()).abs() < 1e-9);
        assert!(r.pass && r.deficit > 0.0);
    }

    #[test]
    fn hpw_gaussian_equality() {
        let m = ModelManifold::euclidean(3, 50.0).unwrap();
        let u = profile(&m, ProfileFamily::Gaussian { alpha: 2.0 });
        let r = hpw_check(&u, &m).unwrap();
        assert!(r.deficit.abs() <= 1e-7 * r.rhs, "{r:?}");
    }

    #[test]
    fn hs_at_s_equal_p_is_hardy() {
        let m = ModelManifold::smoothed_cone(3, 0.8, 1.0, 50.0).unwrap();
        let u = profile(&m, ProfileFamily::Gaussian { alpha: 1.0 });
        let hs = hardy_sobolev_check(&u, &m, &HsParams::new(3, 2.0, 2.0).unwrap()).unwrap();
        let h = hardy_check(&u, &m, 2.0).unwrap();
        assert!((hs.deficit - h.deficit).abs() <= 1e-8 * h.rhs);
    }

    #[test]
    fn ibp_identity_on_annulus() {
        let m = ModelManifold::smoothed_cone(3, 0.5, 1.0, 50.0).unwrap();
        let w = profile(&m, ProfileFamily::Annulus { r_in: 1.0, r_out: 2.0, k: 3.0 });
        let r = ckn_ibp_check(&w, &m, 0.2).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.relative_deficit.abs() < 1e-6);
        let g = profile(&m, ProfileFamily::Gaussian { alpha: 1.0 });
        assert!(matches!(ckn_ibp_check(&g, &m, 0.2), Err(Error::Precondition(_))));
    }

    #[test]
    fn bishop_gromov_on_cone() {
        let m = ModelManifold::smoothed_cone(3, 0.5, 1.0, 50.0).unwrap();
        let radii: Vec<f64> = (1..=50).map(|k| k as f64).collect();
        let rep = bishop_gromov_check(&m, &radii).unwrap();
        assert!(rep.pass);
        assert!(rep.ratios[0] < 1.0 && *rep.ratios.last().unwrap() > 0.25);
        assert!(rep.to_report(&m).unwrap().pass);
    }

    #[test]
    fn non_monotone_weight_is_unsupported() {
        let m = ModelManifold::euclidean(3, 50.0).unwrap();
        let u = profile(&m, ProfileFamily::Gaussian { alpha: 1.0 });
        let w = WeightSpec::Terms { terms: vec![(1.0, -1.0), (1.0, 1.0)] };
        assert!(matches!(sym_lemma_check(&u, &m, &w, 2.0), Err(Error::UnsupportedWeight(_))));
    }
}

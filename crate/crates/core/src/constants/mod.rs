//! Sharp constants: closed forms where known, Rayleigh-quotient minimization
//! otherwise.

pub mod optimize;
mod trial;

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, OnceLock};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::functionals::{rayleigh_quotient, QuotientSpec};
use crate::manifold::ModelManifold;

pub use optimize::{CoordinateDescent, Minimum, NelderMead};
pub use trial::{FreeProfile, TrialFamily, TrialFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMethod {
    ClosedForm,
    QuotientMinimization,
}

/// A sharp constant with an uncertainty bracket.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantEstimate {
    pub value: f64,
    pub bracket: (f64, f64),
    pub method: EstimateMethod,
    pub iterations: usize,
    pub converged: bool,
    /// Best value over the parametric family, when minimized.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family_value: Option<f64>,
    /// Best value after free-profile refinement, when run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub free_value: Option<f64>,
}

impl ConstantEstimate {
    pub fn exact(value: f64) -> Self {
        ConstantEstimate {
            value,
            bracket: (value, value),
            method: EstimateMethod::ClosedForm,
            iterations: 0,
            converged: true,
            family_value: None,
            free_value: None,
        }
    }

    pub fn width(&self) -> f64 {
        self.bracket.1 - self.bracket.0
    }

    /// Bracket width relative to the value.
    pub fn rel_width(&self) -> f64 {
        if self.value == 0.0 {
            0.0
        } else {
            self.width() / self.value.abs()
        }
    }

    fn scaled(mut self, k: f64) -> Self {
        self.value *= k;
        self.bracket = (self.bracket.0 * k, self.bracket.1 * k);
        self.family_value = self.family_value.map(|v| v * k);
        self.free_value = self.free_value.map(|v| v * k);
        self
    }
}

fn check_hardy_range(n: usize, p: f64) -> Result<()> {
    if p > 1.0 && p < n as f64 {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "Hardy inequality requires 1 < p < n (got p = {p}, n = {n})"
        )))
    }
}

fn check_hs_range(n: usize, p: f64, s: f64) -> Result<()> {
    if !(p > 1.0 && p < n as f64) || !(0.0..=p).contains(&s) {
        return Err(Error::Parameter(format!(
            "Hardy-Sobolev inequality requires 1 < p < n and 0 <= s <= p (got p = {p}, s = {s}, n = {n})"
        )));
    }
    Ok(())
}

/// `((n-p)/p)^p`.
pub fn hardy_constant(n: usize, p: f64) -> Result<f64> {
    check_hardy_range(n, p)?;
    Ok(((n as f64 - p) / p).powf(p))
}

/// `n²/4`.
pub fn hpw_constant(n: usize) -> f64 {
    (n * n) as f64 / 4.0
}

/// Best constant `C` in `∫|Du|^p ≥ C ‖u‖_{p*}^p` on `R^n`, `p* = np/(n-p)`.
pub fn sobolev_constant(n: usize, p: f64) -> Result<f64> {
    check_hardy_range(n, p)?;
    let nf = n as f64;
    let ln_ratio = ln_gamma(1.0 + nf / 2.0) + ln_gamma(nf)
        - ln_gamma(nf / p)
        - ln_gamma(1.0 + nf - nf / p);
    let ln_s = -0.5 * std::f64::consts::PI.ln() - nf.ln() / p
        + (1.0 - 1.0 / p) * ((p - 1.0) / (nf - p)).ln()
        + ln_ratio / nf;
    Ok((-p * ln_s).exp())
}

/// Largest admissible CKN parameter: `((n-2)/2)(1 - sqrt(1 - θ^{2/n}))`.
pub fn ckn_a_max(n: usize, theta: f64) -> f64 {
    let nf = n as f64;
    0.5 * (nf - 2.0) * (1.0 - (1.0 - theta.powf(2.0 / nf)).max(0.0).sqrt())
}

/// Guard band below [`ckn_a_max`].
pub const CKN_GUARD: f64 = 1e-12;

/// `θ^{2/n} - 4a(n-2-a)/(n-2)²`.
pub fn ckn_prefactor(n: usize, a: f64, theta: f64) -> f64 {
    let nf = n as f64;
    let gamma = a * (nf - 2.0 - a);
    theta.powf(2.0 / nf) - 4.0 * gamma / ((nf - 2.0) * (nf - 2.0))
}

/// Validates CKN parameters and returns the Lebesgue exponent
/// `p = 2n/(n-2+2(b-a))`.
pub fn check_ckn(n: usize, a: f64, b: f64, theta: f64) -> Result<f64> {
    let a_max = ckn_a_max(n, theta);
    if !(a >= 0.0 && a < a_max - CKN_GUARD) {
        return Err(Error::Parameter(format!(
            "CKN inequality requires 0 <= a < ((n-2)/2)(1-sqrt(1-theta^(2/n))) = {a_max:.12} \
             (got a = {a}, n = {n}, theta = {theta})"
        )));
    }
    if !(b >= a && b <= a + 1.0) {
        return Err(Error::Parameter(format!(
            "CKN inequality requires a <= b <= a + 1 (got a = {a}, b = {b})"
        )));
    }
    Ok(2.0 * n as f64 / (n as f64 - 2.0 + 2.0 * (b - a)))
}

/// How the minimizer searches.
#[derive(Debug, Clone, Copy)]
pub struct SearchSettings {
    pub family: TrialFamily,
    pub restarts: usize,
    /// Objective evaluations per restart.
    pub max_evals: usize,
    pub seed: u64,
    pub free_profile: bool,
    pub free_nodes: usize,
    pub free_evals: usize,
}

impl Default for SearchSettings {
    fn default() -> Self {
        SearchSettings {
            family: TrialFamily::Talenti,
            restarts: 5,
            max_evals: 2000,
            seed: 0,
            free_profile: true,
            free_nodes: 64,
            free_evals: 2000,
        }
    }
}

/// Minimizes a dilation-invariant quotient over radial functions on `R^n`.
pub fn minimize_quotient(n: usize, spec: &QuotientSpec, search: &SearchSettings) -> Result<ConstantEstimate> {
    let m = ModelManifold::euclidean_unbounded(n)?;
    let restarts = search.restarts.max(1);
    let decay = trial::critical_decay(spec, n);
    let family = search.family;
    let objective = |x: &[f64]| -> f64 {
        let (t, penalty) = TrialFunction::from_coords(family, decay, x);
        match rayleigh_quotient(&t, &m, spec) {
            Ok(q) => q.value * (1.0 + penalty),
            Err(_) => f64::INFINITY,
        }
    };
    let starts: Vec<Vec<f64>> = (0..restarts)
        .map(|k| {
            if k == 0 {
                trial::natural_start(family, spec, n)
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(search.seed.wrapping_add(k as u64));
                trial::random_start(family, &mut rng)
            }
        })
        .collect();
    let nm = NelderMead {
        max_evals: search.max_evals,
        ..Default::default()
    };
    let runs: Vec<Minimum> = starts.par_iter().map(|x0| nm.minimize(objective, x0)).collect();
    let mut best = 0;
    for (k, r) in runs.iter().enumerate() {
        if r.value < runs[best].value {
            best = k;
        }
    }
    let mut iterations: usize = runs.iter().map(|r| r.evaluations).sum();
    let family_value = runs[best].value;
    if !family_value.is_finite() {
        return Err(Error::Convergence(format!(
            "no restart produced a finite quotient for {spec:?} in dimension {n}"
        )));
    }
    let mut converged = runs.iter().any(|r| r.converged);

    let mut free_value = None;
    if search.free_profile {
        if let Some(decay) = decay {
            let (seed_fn, _) = TrialFunction::from_coords(family, Some(decay), &runs[best].x);
            let free = FreeProfile::fit(&seed_fn, search.free_nodes, decay);
            let cd = CoordinateDescent {
                max_evals: search.free_evals,
                ..Default::default()
            };
            let res = cd.minimize(
                |y| match free.with_values(y).map(|f| rayleigh_quotient(&f, &m, spec)) {
                    Some(Ok(q)) => q.value,
                    _ => f64::INFINITY,
                },
                free.values(),
            );
            iterations += res.evaluations;
            if res.value.is_finite() {
                free_value = Some(res.value);
            } else {
                converged = false;
            }
        }
    }
    let value = free_value.map_or(family_value, |f| f.min(family_value));
    let spread = free_value.map_or(0.0, |f| (f - family_value).abs());
    Ok(ConstantEstimate {
        value,
        bracket: (value - spread, value + spread),
        method: EstimateMethod::QuotientMinimization,
        iterations,
        converged,
        family_value: Some(family_value),
        free_value,
    })
}

/// Numerical `C_HS(s, p)`: infimum of `∫|Du|^p / (∫|u|^q r^{-s})^{(n-p)/(n-s)}`
/// over radial functions on `R^n`.
pub fn estimate_chs(n: usize, p: f64, s: f64, search: &SearchSettings) -> Result<ConstantEstimate> {
    check_hs_range(n, p, s)?;
    let search = SearchSettings {
        family: TrialFamily::Talenti,
        ..*search
    };
    minimize_quotient(n, &QuotientSpec::HardySobolev { p, s }, &search)
}

/// `C_HS(s, p)`: closed form at `s = 0` (Sobolev) and `s = p` (Hardy),
/// estimated in between.
pub fn chs(n: usize, p: f64, s: f64, search: &SearchSettings) -> Result<ConstantEstimate> {
    check_hs_range(n, p, s)?;
    if s == 0.0 {
        Ok(ConstantEstimate::exact(sobolev_constant(n, p)?))
    } else if s == p {
        Ok(ConstantEstimate::exact(hardy_constant(n, p)?))
    } else {
        estimate_chs(n, p, s, search)
    }
}

type Slot = Arc<OnceLock<std::result::Result<ConstantEstimate, String>>>;

/// Memoized [`chs`] values, safe to share across workers. Each key is
/// computed once; concurrent requests for the same key wait for it.
pub struct ConstantCache {
    search: SearchSettings,
    slots: Mutex<BTreeMap<(usize, u64, u64), Slot>>,
}

impl ConstantCache {
    pub fn new(search: SearchSettings) -> Self {
        ConstantCache {
            search,
            slots: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn chs(&self, n: usize, p: f64, s: f64) -> Result<ConstantEstimate> {
        let slot = {
            let mut slots = self.slots.lock().expect("constant cache poisoned");
            slots.entry((n, p.to_bits(), s.to_bits())).or_default().clone()
        };
        slot.get_or_init(|| chs(n, p, s, &self.search).map_err(|e| e.to_string()))
            .clone()
            .map_err(Error::Convergence)
    }

    /// `C(a, b, θ) = (θ^{2/n} - 4γ/(n-2)²) C_HS(p(b-a), 2)` with
    /// `γ = a(n-2-a)` and `p = 2n/(n-2+2(b-a))`.
    pub fn ckn(&self, n: usize, a: f64, b: f64, theta: f64) -> Result<ConstantEstimate> {
        let p = check_ckn(n, a, b, theta)?;
        let pre = ckn_prefactor(n, a, theta);
        if pre <= 0.0 {
            return Err(Error::Parameter(format!(
                "CKN prefactor theta^(2/n) - 4a(n-2-a)/(n-2)^2 = {pre} is not positive"
            )));
        }
        let s = p * (b - a);
        // b - a = 1 gives s = 2 up to rounding
        let s = if (s - 2.0).abs() < 1e-14 { 2.0 } else { s };
        Ok(self.chs(n, 2.0, s)?.scaled(pre))
    }
}

/// [`ConstantCache::ckn`] without memoization.
pub fn ckn_constant(n: usize, a: f64, b: f64, theta: f64, search: &SearchSettings) -> Result<ConstantEstimate> {
    ConstantCache::new(*search).ckn(n, a, b, theta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        assert_eq!(hardy_constant(3, 2.0).unwrap(), 0.25);
        assert_eq!(hardy_constant(4, 2.0).unwrap(), 1.0);
        assert!(hardy_constant(3, 2.999_999).unwrap() < 1e-12);
        assert!(hardy_constant(3, 3.0).is_err());
        assert_eq!(hpw_constant(3), 2.25);
        assert_eq!(hpw_constant(2), 1.0);
        let want = 3.0 * (std::f64::consts::PI / 2.0).powf(4.0 / 3.0);
        assert!((sobolev_constant(3, 2.0).unwrap() / want - 1.0).abs() < 1e-13);
    }

    #[test]
    fn ckn_prefactor_example() {
        let pre = ckn_prefactor(3, 0.05, 0.64);
        assert!((pre - (0.64f64.powf(2.0 / 3.0) - 0.19)).abs() < 1e-15);
        assert!((ckn_a_max(3, 0.64) - 0.5 * (1.0 - (1.0 - 0.64f64.powf(2.0 / 3.0)).sqrt())).abs() < 1e-15);
        assert!(ckn_prefactor(3, ckn_a_max(3, 0.64), 0.64).abs() < 1e-14);
    }

    #[test]
    fn ckn_collapses_to_closed_forms() {
        let cache = ConstantCache::new(SearchSettings::default());
        let sob = cache.ckn(3, 0.0, 0.0, 1.0).unwrap();
        assert_eq!(sob.value, sobolev_constant(3, 2.0).unwrap());
        let hardy = cache.ckn(3, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(hardy.value, 0.25);
        assert!(cache.ckn(3, 0.3, 0.5, 0.64).is_err());
        assert!(cache.ckn(3, 0.05, 1.2, 0.64).is_err());
    }

    #[test]
    fn ckn_range_message() {
        let err = check_ckn(3, 0.3, 0.5, 0.64).unwrap_err().to_string();
        assert!(err.contains("((n-2)/2)(1-sqrt(1-theta^(2/n)))"), "{err}");
    }
}

//! Validation of a [`RunConfig`] and its expansion into tasks.

use serde::{Deserialize, Serialize};

use super::config::{RunConfig, Suite};
use crate::constants::{check_ckn, ckn_a_max};
use crate::error::{Error, Result};
use crate::inequalities::HsParams;
use crate::manifold::{ManifoldSpec, ModelManifold};
use crate::radial::ProfileFamily;

/// Parameters of one check.
#[derive(Debug, Clone, PartialEq)]
pub enum TaskParams {
    Ps { p: f64 },
    Lemma { p: f64, weight_exponent: f64 },
    Hardy { p: f64 },
    Hpw,
    Hs { p: f64, s: f64 },
    Ckn { a: f64, b: f64 },
    Ibp { a: f64 },
    Bg { radii: Vec<f64> },
}

impl TaskParams {
    pub fn describe(&self) -> String {
        match self {
            TaskParams::Ps { p } | TaskParams::Hardy { p } => format!("p={p}"),
            TaskParams::Lemma { p, weight_exponent } => format!("p={p} weight=r^{weight_exponent}"),
            TaskParams::Hpw => String::new(),
            TaskParams::Hs { p, s } => format!("p={p} s={s}"),
            TaskParams::Ckn { a, b } => format!("a={a} b={b}"),
            TaskParams::Ibp { a } => format!("a={a}"),
            TaskParams::Bg { radii } => format!("points={}", radii.len()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub suite: Suite,
    pub manifold: usize,
    pub profile: Option<usize>,
    pub params: TaskParams,
}

/// A tuple left out because its parameters are invalid on one manifold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skip {
    pub suite: String,
    pub manifold: String,
    pub profile: String,
    pub params: String,
    pub reason: String,
}

pub struct Plan {
    pub config: RunConfig,
    pub manifolds: Vec<ModelManifold>,
    pub specs: Vec<ManifoldSpec>,
    pub profiles: Vec<ProfileFamily>,
    /// In deterministic order: suite, manifold, profile, parameters.
    pub tasks: Vec<Task>,
    pub skipped: Vec<Skip>,
}

fn cartesian(grids: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for g in grids {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                g.iter().map(move |v| {
                    let mut row = prefix.clone();
                    row.push(*v);
                    row
                })
            })
            .collect();
    }
    out
}

/// Parameter tuples of one suite on one manifold; `Err` entries are
/// skipped with the given reason.
fn suite_params(cfg: &RunConfig, suite: Suite, m: &ModelManifold, theta: f64) -> Vec<std::result::Result<TaskParams, String>> {
    let n = m.n();
    let nf = n as f64;
    let g = &cfg.params;
    let hardy_range = |p: f64| {
        if p > 1.0 && p < nf {
            Ok(())
        } else {
            Err(format!("Hardy inequality requires 1 < p < n (got p = {p}, n = {n})"))
        }
    };
    match suite {
        Suite::Ps => g.ps.p.iter().map(|&p| Ok(TaskParams::Ps { p })).collect(),
        Suite::Lemmas => {
            let mut out = Vec::new();
            for &p in &g.lemmas.p {
                for &e in &g.lemmas.weight_exponents {
                    out.push(Ok(TaskParams::Lemma { p, weight_exponent: e }));
                }
            }
            out
        }
        Suite::Hardy => g
            .hardy
            .p
            .iter()
            .map(|&p| hardy_range(p).map(|_| TaskParams::Hardy { p }))
            .collect(),
        Suite::Hpw => vec![Ok(TaskParams::Hpw)],
        Suite::Hs => {
            let mut out = Vec::new();
            for &p in &g.hs.p {
                for &f in &g.hs.s_fractions {
                    let s = f * p;
                    out.push(
                        HsParams::new(n, p, s)
                            .map(|_| TaskParams::Hs { p, s })
                            .map_err(|e| e.to_string()),
                    );
                }
            }
            out
        }
        Suite::Ckn => {
            let a_values: Vec<f64> = match &g.ckn.a {
                Some(a) => a.clone(),
                None => {
                    let a_max = ckn_a_max(n, theta);
                    g.ckn.a_fractions.iter().map(|f| f * a_max).collect()
                }
            };
            let mut out = Vec::new();
            for &a in &a_values {
                for &off in &g.ckn.b_offsets {
                    let b = a + off;
                    out.push(
                        check_ckn(n, a, b, theta)
                            .map(|_| TaskParams::Ckn { a, b })
                            .map_err(|e| e.to_string()),
                    );
                }
            }
            out
        }
        Suite::Ibp => g.ibp.a.iter().map(|&a| Ok(TaskParams::Ibp { a })).collect(),
        Suite::Bg => {
            let (lo, hi, k) = (g.bg.r_min, m.r_max(), g.bg.points);
            let q = (hi / lo).powf(1.0 / (k - 1) as f64);
            let mut radii: Vec<f64> = (0..k).map(|i| lo * q.powi(i as i32)).collect();
            radii[k - 1] = hi;
            vec![Ok(TaskParams::Bg { radii })]
        }
    }
}

/// Reasons a (profile, parameters) pair cannot run on `m`, beyond the
/// parameter checks themselves.
fn tuple_problem(suite: Suite, m: &ModelManifold, f: &ProfileFamily, params: &TaskParams) -> Option<String> {
    if let Err(e) = f.validate(m.n()) {
        return Some(e.to_string());
    }
    let (inner, outer) = f.support();
    if outer > m.r_max() {
        return Some(format!("profile support {outer} exceeds r_max {}", m.r_max()));
    }
    if m.is_vertex_singular() && inner == 0.0 {
        return Some("the exact cone is singular at its vertex; profiles must vanish near r = 0".into());
    }
    let nf = m.n() as f64;
    match (suite, params) {
        (Suite::Lemmas, TaskParams::Lemma { weight_exponent, .. }) if inner == 0.0 && *weight_exponent <= -nf => {
            Some(format!("weight r^{weight_exponent} is not integrable at the origin in dimension {}", m.n()))
        }
        (Suite::Ibp, TaskParams::Ibp { a }) if inner == 0.0 && *a != 0.0 => {
            Some("the integration-by-parts identity needs a profile supported away from r = 0".into())
        }
        _ => None,
    }
}

fn corpus(cfg: &RunConfig, errors: &mut Vec<String>) -> Vec<ProfileFamily> {
    let mut out = Vec::new();
    for entry in &cfg.corpus {
        let Some(names) = ProfileFamily::param_names(&entry.family) else {
            errors.push(format!("unknown profile family '{}'", entry.family));
            continue;
        };
        for key in entry.params.keys() {
            if !names.contains(&key.as_str()) {
                errors.push(format!("family '{}' has no parameter '{key}' (expected {names:?})", entry.family));
            }
        }
        let mut grids = Vec::new();
        for name in names {
            match entry.params.get(*name) {
                Some(v) => grids.push(v.to_vec()),
                None => errors.push(format!("family '{}' is missing parameter '{name}'", entry.family)),
            }
        }
        if grids.len() != names.len() {
            continue;
        }
        for row in cartesian(&grids) {
            match ProfileFamily::from_params(&entry.family, &row) {
                Ok(f) => out.push(f),
                Err(e) => errors.push(e.to_string()),
            }
        }
    }
    out
}

impl Plan {
    /// Validates the configuration and expands it. Every problem is
    /// collected into one [`Error::Validation`].
    pub fn new(config: RunConfig) -> Result<Plan> {
        let mut errors = Vec::new();
        if config.suites.is_empty() {
            errors.push("no suites selected".to_string());
        }
        if config.manifolds.is_empty() {
            errors.push("no manifolds given".to_string());
        }
        let mut manifolds = Vec::new();
        let mut specs = Vec::new();
        for entry in &config.manifolds {
            let dims = entry.n.to_vec();
            if dims.is_empty() {
                errors.push(format!("manifold '{}' lists no dimensions", entry.catalog));
            }
            for n in dims {
                match ManifoldSpec::parse_catalog(&entry.catalog, n, entry.r_max).and_then(|s| {
                    let m = s.build()?;
                    m.avr()?;
                    Ok((m.spec(), m))
                }) {
                    Ok((s, m)) => {
                        specs.push(s);
                        manifolds.push(m);
                    }
                    Err(e) => errors.push(format!("manifold '{}' with n = {n}: {e}", entry.catalog)),
                }
            }
        }
        let profiles = corpus(&config, &mut errors);
        if profiles.is_empty() && config.suites.iter().any(|s| s.uses_corpus()) {
            errors.push("the corpus expands to no profiles".to_string());
        }
        for f in &profiles {
            if manifolds.iter().all(|m| f.validate(m.n()).is_err()) {
                if let Some(e) = manifolds.first().map(|m| f.validate(m.n())) {
                    errors.push(format!("{} is invalid in every dimension: {}", f, e.unwrap_err()));
                }
            }
        }
        let p = &config.params;
        if p.ps.p.iter().any(|v| !(*v >= 1.0)) {
            errors.push("Polya-Szego inequality requires p >= 1".to_string());
        }
        if p.lemmas.p.iter().any(|v| !(*v > 0.0)) {
            errors.push("rearrangement lemmas require p > 0".to_string());
        }
        if p.hs.s_fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
            errors.push("hs.s_fractions must lie in [0, 1] since 0 <= s <= p".to_string());
        }
        if p.ckn.a.is_none() && p.ckn.a_fractions.iter().any(|f| !(0.0..1.0).contains(f)) {
            errors.push("ckn.a_fractions must lie in [0, 1) to keep a below its upper bound".to_string());
        }
        if p.ckn.b_offsets.iter().any(|o| !(0.0..=1.0).contains(o)) {
            errors.push("CKN inequality requires a <= b <= a + 1; ckn.b_offsets must lie in [0, 1]".to_string());
        }
        if p.bg.points < 2 || !(p.bg.r_min > 0.0) {
            errors.push("bg needs points >= 2 and r_min > 0".to_string());
        }
        if !manifolds.iter().all(|m| p.bg.r_min < m.r_max()) {
            errors.push("bg.r_min must be below every manifold's r_max".to_string());
        }
        if !errors.is_empty() {
            return Err(Error::Validation(errors));
        }

        let mut tasks = Vec::new();
        let mut skipped = Vec::new();
        for &suite in &config.suites {
            let before = tasks.len();
            // parameter values rejected on every manifold are config errors
            let mut rejected: Vec<Vec<String>> = Vec::new();
            for (mi, m) in manifolds.iter().enumerate() {
                let theta = m.avr()?;
                let params = suite_params(&config, suite, m, theta);
                if rejected.is_empty() {
                    rejected = vec![Vec::new(); params.len()];
                }
                for (k, tp) in params.into_iter().enumerate() {
                    let tp = match tp {
                        Ok(tp) => tp,
                        Err(reason) => {
                            log::info!("skipping {suite} on {}: {reason}", specs[mi].label());
                            rejected[k].push(reason.clone());
                            skipped.push(Skip {
                                suite: suite.name().into(),
                                manifold: specs[mi].label(),
                                profile: "*".into(),
                                params: String::new(),
                                reason,
                            });
                            continue;
                        }
                    };
                    if !suite.uses_corpus() {
                        tasks.push(Task { suite, manifold: mi, profile: None, params: tp });
                        continue;
                    }
                    for (pi, f) in profiles.iter().enumerate() {
                        if let Some(reason) = tuple_problem(suite, m, f, &tp) {
                            log::info!("skipping {suite} {} on {} for {f}: {reason}", tp.describe(), specs[mi].label());
                            skipped.push(Skip {
                                suite: suite.name().into(),
                                manifold: specs[mi].label(),
                                profile: f.to_string(),
                                params: tp.describe(),
                                reason,
                            });
                            continue;
                        }
                        tasks.push(Task { suite, manifold: mi, profile: Some(pi), params: tp.clone() });
                    }
                }
            }
            for reasons in &rejected {
                if reasons.len() == manifolds.len() {
                    errors.push(format!("{suite}: {}", reasons[0]));
                }
            }
            if tasks.len() == before && errors.is_empty() {
                errors.push(format!("suite {suite} has no admissible tuples"));
            }
        }
        errors.dedup();
        if !errors.is_empty() {
            return Err(Error::Validation(errors));
        }
        Ok(Plan {
            config,
            manifolds,
            specs,
            profiles,
            tasks,
            skipped,
        })
    }

    /// Tuples before filtering: per suite, manifolds × parameters, times
    /// the corpus size for suites that use it.
    pub fn unfiltered_count(&self) -> usize {
        let mut total = 0;
        for &suite in &self.config.suites {
            for m in &self.manifolds {
                let theta = m.avr().unwrap_or(1.0);
                let k = suite_params(&self.config, suite, m, theta).len();
                total += if suite.uses_corpus() { k * self.profiles.len() } else { k };
            }
        }
        total
    }

    /// Tuples removed by filtering, counting a rejected parameter value
    /// once per corpus member.
    pub fn filtered_count(&self) -> usize {
        self.skipped
            .iter()
            .map(|s| {
                let suite = Suite::parse_list(&[s.suite.as_str()]).ok().and_then(|v| v.first().copied());
                if s.profile == "*" && suite.is_some_and(Suite::uses_corpus) {
                    self.profiles.len()
                } else {
                    1
                }
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan(text: &str) -> Result<Plan> {
        Plan::new(RunConfig::parse(text)?)
    }

    const BASE: &str = r#"
[[manifold]]
catalog = "euclidean"
n = 3
[[corpus]]
family = "gaussian"
alpha = [0.5, 1.0]
"#;

    #[test]
    fn hardy_range_violation_names_the_range() {
        let err = plan(&format!("suites = [\"hardy\"]\n{BASE}\n[params.hardy]\np = [3.0]\n")).err().unwrap();
        let msg = err.to_string();
        assert!(msg.contains("1 < p < n"), "{msg}");
    }

    #[test]
    fn ckn_bound_from_theta() {
        let text = r#"
suites = ["ckn"]
[[manifold]]
catalog = "cone(0.5,1)"
n = 3
[[corpus]]
family = "gaussian"
alpha = 1.0
[params.ckn]
a = [0.2]
"#;
        // θ = 1/4, a_max = (1/2)(1 - sqrt(1 - 4^{-2/3}))
        let a_max = 0.5 * (1.0 - (1.0 - 0.25f64.powf(2.0 / 3.0)).sqrt());
        assert!(a_max < 0.2 && a_max > 0.1);
        let msg = plan(text).err().unwrap().to_string();
        assert!(msg.contains("CKN inequality requires"), "{msg}");
    }

    #[test]
    fn empty_corpus_is_rejected() {
        let text = "suites = [\"ps\"]\n[[manifold]]\ncatalog = \"euclidean\"\nn = 3\n[[corpus]]\nfamily = \"gaussian\"\nalpha = []\n";
        let msg = plan(text).err().unwrap().to_string();
        assert!(msg.contains("no profiles"), "{msg}");
    }

    #[test]
    fn all_violations_are_listed() {
        let text = r#"
suites = ["hardy", "hs"]
[[manifold]]
catalog = "cone(2,1)"
n = 3
[[corpus]]
family = "gaussian"
alpha = 1.0
beta = 2.0
"#;
        match plan(text).err().unwrap() {
            Error::Validation(v) => assert!(v.len() >= 2, "{v:?}"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn counts_and_skips() {
        let text = r#"
suites = ["hardy", "ibp", "bg"]
[[manifold]]
catalog = "euclidean"
n = [3, 4]
[[corpus]]
family = "gaussian"
alpha = 1.0
[[corpus]]
family = "annulus"
r_in = 1.0
r_out = 2.0
k = 3.0
[params.hardy]
p = [2.0, 3.5]
"#;
        let p = plan(text).unwrap();
        // hardy: p = 3.5 is invalid for n = 3 only
        // ibp: a != 0 skipped for the gaussian
        assert_eq!(p.unfiltered_count(), 2 * 2 * 2 + 2 * 3 * 2 + 2);
        assert_eq!(p.filtered_count(), 2 + 2 * 2);
        assert_eq!(p.tasks.len(), p.unfiltered_count() - p.filtered_count());
    }
}

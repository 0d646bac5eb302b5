//! Executes a [`Plan`] in parallel and aggregates the results.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::plan::{Plan, Skip, Task, TaskParams};
use crate::functionals::WeightSpec;
use crate::inequalities::{bishop_gromov_check, Checker, CknParams, HsParams, InequalityReport, Rearrangement};
use crate::radial::{materialize, RadialGrid, RadialProfile};

/// One line of `reports.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub suite: String,
    #[serde(flatten)]
    pub report: InequalityReport,
}

/// A tuple whose check raised an error instead of producing a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskError {
    pub suite: String,
    pub manifold: String,
    pub profile: String,
    pub params: String,
    pub message: String,
    pub numerical: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub reports: usize,
    pub passed: usize,
    pub failed: usize,
    pub errors: usize,
    /// Most negative relative deficit, with the tuple it came from.
    pub worst_relative_deficit: Option<f64>,
    pub worst_deficit: Option<f64>,
    pub worst_tuple: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub reports: usize,
    pub passed: usize,
    pub failed: usize,
    pub errors: usize,
    /// Tuples before precondition filtering.
    pub tuples: usize,
    pub filtered: usize,
    pub suites: BTreeMap<String, SuiteSummary>,
    pub failures: Vec<String>,
    pub task_errors: Vec<TaskError>,
    pub skipped: Vec<Skip>,
}

impl Summary {
    /// 0 when every report passes, 3 on numerical errors, 2 on other
    /// errors, 1 on inequality failures.
    pub fn exit_code(&self) -> i32 {
        if self.task_errors.iter().any(|e| e.numerical) {
            3
        } else if !self.task_errors.is_empty() {
            2
        } else if self.failed > 0 {
            1
        } else {
            0
        }
    }
}

pub struct RunOutput {
    pub records: Vec<Record>,
    pub summary: Summary,
}

type Cached<T> = OnceLock<std::result::Result<T, (bool, String)>>;

fn keep<T>(r: crate::Result<T>) -> std::result::Result<T, (bool, String)> {
    r.map_err(|e| (e.is_numerical(), e.to_string()))
}

struct Workspace<'a> {
    plan: &'a Plan,
    checker: Checker,
    profiles: Vec<Cached<RadialProfile>>,
    rearranged: Vec<Cached<Rearrangement>>,
}

impl<'a> Workspace<'a> {
    fn slot(&self, profile: usize, manifold: usize) -> usize {
        manifold * self.plan.profiles.len() + profile
    }

    fn profile(&self, profile: usize, manifold: usize) -> std::result::Result<&RadialProfile, (bool, String)> {
        let m = &self.plan.manifolds[manifold];
        self.profiles[self.slot(profile, manifold)]
            .get_or_init(|| {
                keep(RadialGrid::default_for(m).and_then(|g| materialize(&self.plan.profiles[profile], m, &g)))
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    fn rearranged(&self, profile: usize, manifold: usize) -> std::result::Result<&Rearrangement, (bool, String)> {
        let u = self.profile(profile, manifold)?;
        let m = &self.plan.manifolds[manifold];
        self.rearranged[self.slot(profile, manifold)]
            .get_or_init(|| keep(Rearrangement::new(u, m)))
            .as_ref()
            .map_err(Clone::clone)
    }

    fn run(&self, t: &Task) -> std::result::Result<InequalityReport, (bool, String)> {
        let m = &self.plan.manifolds[t.manifold];
        let c = &self.checker;
        if let TaskParams::Bg { radii } = &t.params {
            return keep(bishop_gromov_check(m, radii).and_then(|r| r.to_report(m)));
        }
        let pi = t.profile.ok_or_else(|| (false, "task needs a profile".to_string()))?;
        let u = self.profile(pi, t.manifold)?;
        let out = match t.params {
            TaskParams::Ps { p } => c.polya_szego_with(u, m, self.rearranged(pi, t.manifold)?, p),
            TaskParams::Lemma { p, weight_exponent } => {
                let w = WeightSpec::power(weight_exponent);
                c.sym_lemma_with(u, m, self.rearranged(pi, t.manifold)?, &w, p)
            }
            TaskParams::Hardy { p } => c.hardy(u, m, p),
            TaskParams::Hpw => c.hpw(u, m),
            TaskParams::Hs { p, s } => c.hardy_sobolev(u, m, &HsParams { p, s }),
            TaskParams::Ckn { a, b } => c.ckn(u, m, &CknParams { a, b }),
            TaskParams::Ibp { a } => c.ckn_ibp(u, m, a),
            TaskParams::Bg { .. } => unreachable!(),
        };
        keep(out)
    }
}

fn tuple_label(plan: &Plan, t: &Task) -> String {
    let profile = t.profile.map_or("-".to_string(), |i| plan.profiles[i].to_string());
    format!("{} {} {} {}", t.suite, plan.specs[t.manifold].label(), profile, t.params.describe())
}

/// Runs every task. Work is spread over the rayon pool; results keep the
/// plan's order, so output does not depend on scheduling.
pub fn run(plan: &Plan) -> RunOutput {
    let slots = plan.profiles.len() * plan.manifolds.len();
    let ws = Workspace {
        plan,
        checker: Checker::new(plan.config.tolerances, plan.config.search_settings()),
        profiles: (0..slots).map(|_| OnceLock::new()).collect(),
        rearranged: (0..slots).map(|_| OnceLock::new()).collect(),
    };
    // constant estimates run their own parallel search; computing them here
    // keeps a worker from stealing a task that waits on the same cache slot
    for t in &plan.tasks {
        let n = plan.manifolds[t.manifold].n();
        match t.params {
            TaskParams::Hs { p, s } => {
                let _ = ws.checker.constants.chs(n, p, s);
            }
            TaskParams::Ckn { a, b } => {
                if let Ok(theta) = plan.manifolds[t.manifold].avr() {
                    let _ = ws.checker.constants.ckn(n, a, b, theta);
                }
            }
            _ => {}
        }
    }
    let outcomes: Vec<_> = plan.tasks.par_iter().map(|t| ws.run(t)).collect();

    let mut records = Vec::new();
    let mut suites: BTreeMap<String, SuiteSummary> = BTreeMap::new();
    for s in &plan.config.suites {
        suites.insert(s.name().to_string(), SuiteSummary::default());
    }
    let mut failures = Vec::new();
    let mut task_errors = Vec::new();
    for (t, outcome) in plan.tasks.iter().zip(outcomes) {
        let entry = suites.entry(t.suite.name().to_string()).or_default();
        match outcome {
            Ok(report) => {
                entry.reports += 1;
                if report.pass {
                    entry.passed += 1;
                } else {
                    entry.failed += 1;
                    failures.push(tuple_label(plan, t));
                    log::warn!("FAIL {}: relative deficit {:e}", tuple_label(plan, t), report.relative_deficit);
                }
                if entry.worst_relative_deficit.is_none_or(|w| report.relative_deficit < w) {
                    entry.worst_relative_deficit = Some(report.relative_deficit);
                    entry.worst_deficit = Some(report.deficit);
                    entry.worst_tuple = Some(tuple_label(plan, t));
                }
                records.push(Record {
                    suite: t.suite.name().to_string(),
                    report,
                });
            }
            Err((numerical, message)) => {
                entry.errors += 1;
                log::error!("{}: {message}", tuple_label(plan, t));
                task_errors.push(TaskError {
                    suite: t.suite.name().to_string(),
                    manifold: plan.specs[t.manifold].label(),
                    profile: t.profile.map_or("-".to_string(), |i| plan.profiles[i].to_string()),
                    params: t.params.describe(),
                    message,
                    numerical,
                });
            }
        }
    }
    let passed = records.iter().filter(|r| r.report.pass).count();
    let summary = Summary {
        reports: records.len(),
        passed,
        failed: records.len() - passed,
        errors: task_errors.len(),
        tuples: plan.unfiltered_count(),
        filtered: plan.filtered_count(),
        suites,
        failures,
        task_errors,
        skipped: plan.skipped.clone(),
    };
    RunOutput { records, summary }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(failed: usize, errors: Vec<TaskError>) -> Summary {
        Summary {
            reports: failed,
            passed: 0,
            failed,
            errors: errors.len(),
            tuples: failed + errors.len(),
            filtered: 0,
            suites: BTreeMap::new(),
            failures: Vec::new(),
            task_errors: errors,
            skipped: Vec::new(),
        }
    }

    fn task_error(numerical: bool) -> TaskError {
        TaskError {
            suite: "hs".into(),
            manifold: "euclidean/n=3".into(),
            profile: "gaussian(alpha=1)".into(),
            params: "p=2 s=1".into(),
            message: "quadrature failed to converge".into(),
            numerical,
        }
    }

    #[test]
    fn exit_codes_rank_errors_above_failures() {
        assert_eq!(summary(0, vec![]).exit_code(), 0);
        assert_eq!(summary(2, vec![]).exit_code(), 1);
        assert_eq!(summary(2, vec![task_error(false)]).exit_code(), 2);
        assert_eq!(summary(2, vec![task_error(false), task_error(true)]).exit_code(), 3);
    }
}

//! Acceptance run: each criterion prints one PASS/FAIL line with its
//! runtime against the limit. Exits nonzero if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use sharp_ineq::constants::{estimate_chs, hardy_constant, SearchSettings};
use sharp_ineq::driver::{self, output, Record, RunConfig, Suite, Summary};
use sharp_ineq::functionals::{lp_integral, rayleigh_quotient, QuotientSpec};
use sharp_ineq::inequalities::{bishop_gromov_check, hpw_check};
use sharp_ineq::manifold::ModelManifold;
use sharp_ineq::radial::{materialize, ProfileFamily, RadialFunction, RadialGrid, RadialProfile};
use sharp_ineq::rearrange::Rearranged;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn profile(f: &ProfileFamily, m: &ModelManifold) -> Result<RadialProfile, String> {
    let grid = RadialGrid::default_for(m).map_err(|e| e.to_string())?;
    materialize(f, m, &grid).map_err(|e| e.to_string())
}

const CORPUS: &str = r#"
[[corpus]]
family = "gaussian"
alpha = 1.0
[[corpus]]
family = "bump"
radius = 2.0
k = 3.0
[[corpus]]
family = "two_bump"
h1 = 1.0
w1 = 1.5
h2 = 0.7
c2 = 2.2
w2 = 1.0
[[corpus]]
family = "talenti"
p = 2.0
support = 20.0
[[corpus]]
family = "hardy_near_extremal"
beta = 0.5
eps = 0.5
[[corpus]]
family = "annulus"
r_in = 1.0
r_out = 2.0
k = 3.0
[[corpus]]
family = "plateau"
height = 1.0
radius = 1.0
ramp = 0.3
"#;

const MODELS: &str = r#"
[[manifold]]
catalog = "euclidean"
n = [3, 4]
[[manifold]]
catalog = "cone(0.5,1)"
n = [3, 4]
[[manifold]]
catalog = "cone(0.8,1)"
n = [3, 4]
"#;

const EXACT_CONE: &str = r#"
[[manifold]]
catalog = "exact_cone(0.7)"
n = [3, 4]
"#;

/// Runs a configuration in process; any task error fails the criterion.
fn run_config(text: &str) -> Result<Vec<Record>, String> {
    let out = driver::verify_text(text).map_err(|e| e.to_string())?;
    ensure(out.summary.task_errors.is_empty(), || {
        format!("{} task errors, first: {:?}", out.summary.errors, out.summary.task_errors.first())
    })?;
    Ok(out.records)
}

fn euclidean_self_consistency() -> Outcome {
    let members = [
        ProfileFamily::Gaussian { alpha: 1.0 },
        ProfileFamily::Bump { radius: 2.0, k: 3.0 },
        ProfileFamily::Talenti { p: 2.0, support: 20.0 },
        ProfileFamily::HardyNearExtremal { beta: 0.5, eps: 0.5 },
        ProfileFamily::Plateau { height: 1.0, radius: 1.0, ramp: 0.3 },
    ];
    let mut worst_sup = 0.0f64;
    let mut worst_norm = 0.0f64;
    for n in [3, 4] {
        let m = ModelManifold::euclidean(n, 50.0).map_err(|e| e.to_string())?;
        for f in &members {
            let u = profile(f, &m)?;
            let ustar = Rearranged::new(&u, &m).map_err(|e| e.to_string())?;
            let scale = u.max_abs();
            let outer = u.support_radius();
            for i in 0..2000 {
                let r = outer * (i as f64 + 0.5) / 2000.0;
                let d = (u.eval(r).0 - ustar.eval(r).0).abs() / scale;
                ensure(d <= 1e-8, || format!("{f} n={n}: |u - u*| = {d:e} at r = {r}"))?;
                worst_sup = worst_sup.max(d);
            }
            for p in [1.0, 1.5, 2.0, 3.0] {
                let a = lp_integral(&u, &m, p).map_err(|e| e.to_string())?.value.powf(1.0 / p);
                let b = lp_integral(&ustar, &m, p).map_err(|e| e.to_string())?.value.powf(1.0 / p);
                let d = (a - b).abs() / a;
                ensure(d <= 1e-6, || format!("{f} n={n} p={p}: norms {a} vs {b}"))?;
                worst_norm = worst_norm.max(d);
            }
        }
    }
    Ok(format!("sup |u - u*| {worst_sup:.1e}, norm mismatch {worst_norm:.1e}"))
}

fn hpw_equality() -> Outcome {
    let mut worst = 0.0f64;
    for n in [3, 4, 5] {
        let m = ModelManifold::euclidean(n, 50.0).map_err(|e| e.to_string())?;
        let u = profile(&ProfileFamily::Gaussian { alpha: 1.0 }, &m)?;
        let rep = hpw_check(&u, &m).map_err(|e| e.to_string())?;
        let quotient = rep.rhs / rep.lhs;
        let target = (n * n) as f64 / 4.0;
        let d = (quotient / target - 1.0).abs();
        ensure(d <= 1e-6, || format!("n={n}: quotient {quotient} vs {target}"))?;
        worst = worst.max(d);
    }
    Ok(format!("n=3 quotient 2.25, worst relative error {worst:.1e}"))
}

fn hardy_sharpness() -> Outcome {
    // the quotient approaches the constant like 1 + O(1/ln(1/eps))
    let eps = 1e-30;
    let mut lines = Vec::new();
    for (n, p) in [(3usize, 2.0f64), (4, 2.0), (5, 3.0)] {
        let m = ModelManifold::euclidean(n, 20.0 / eps).map_err(|e| e.to_string())?;
        let beta = (n as f64 - p) / p;
        let u = profile(&ProfileFamily::HardyNearExtremal { beta, eps }, &m)?;
        let q = rayleigh_quotient(&u, &m, &QuotientSpec::Hardy { p })
            .map_err(|e| e.to_string())?
            .value;
        let c = hardy_constant(n, p).map_err(|e| e.to_string())?;
        ensure(q >= c - 1e-8, || format!("n={n} p={p}: quotient {q} below {c}"))?;
        ensure(q <= 1.05 * c, || format!("n={n} p={p}: quotient {q} not within 5% of {c}"))?;
        lines.push(format!("({n},{p}) {:+.2}%", 100.0 * (q / c - 1.0)));
    }
    Ok(lines.join(", "))
}

fn polya_szego_grid() -> Outcome {
    let text = format!("suites = [\"ps\"]\n[params.ps]\np = [1.5, 2.0, 3.0]\n{MODELS}{CORPUS}");
    let records = run_config(&text)?;
    ensure(records.len() == 3 * 2 * 7 * 3, || format!("{} reports", records.len()))?;
    let mut worst = f64::INFINITY;
    for r in &records {
        let rep = &r.report;
        ensure(rep.deficit >= -1e-8 * rep.rhs, || {
            format!("{} {} p={}: deficit {:e}", rep.manifold.label(), rep.profile, rep.params["p"], rep.deficit)
        })?;
        worst = worst.min(rep.deficit / rep.rhs);
    }
    Ok(format!("{} tuples, worst deficit/rhs {worst:+.1e}", records.len()))
}

fn lemma_grid() -> Outcome {
    let text = format!(
        "suites = [\"lemmas\"]\n[params.lemmas]\np = [1.5, 2.0, 3.0]\nweight_exponents = [-1.0, -2.0, 2.0, 0.0]\n{MODELS}{CORPUS}"
    );
    let records = run_config(&text)?;
    ensure(records.len() == 3 * 2 * 7 * 3 * 4, || format!("{} reports", records.len()))?;
    let mut worst_eq = 0.0f64;
    for r in &records {
        let rep = &r.report;
        let label = || format!("{} {} {:?}", rep.manifold.label(), rep.profile, rep.params);
        ensure(rep.pass, || format!("{}: relative deficit {:e}", label(), rep.relative_deficit))?;
        if rep.params["weight_exponent"] == 0.0 {
            ensure(rep.relative_deficit.abs() <= 1e-6, || format!("{}: equality off by {:e}", label(), rep.relative_deficit))?;
            worst_eq = worst_eq.max(rep.relative_deficit.abs());
        }
    }
    Ok(format!("{} tuples, constant-weight mismatch {worst_eq:.1e}", records.len()))
}

fn theorem_suites() -> Outcome {
    let text = format!(
        "suites = [\"hardy\", \"hpw\", \"hs\", \"ckn\"]\n\
         [params.hardy]\np = [1.5, 2.0]\n\
         [params.hs]\np = [2.0]\ns_fractions = [0.0, 0.5, 1.0]\n\
         [params.ckn]\na_fractions = [0.0, 0.3, 0.6]\nb_offsets = [0.0, 0.5, 1.0]\n\
         {MODELS}{EXACT_CONE}{CORPUS}"
    );
    let records = run_config(&text)?;
    let mut by_suite: BTreeMap<&str, (usize, f64)> = BTreeMap::new();
    let mut ckn_grid: BTreeMap<(String, String), usize> = BTreeMap::new();
    for r in &records {
        let rep = &r.report;
        ensure(rep.pass, || {
            format!("{} {} {} {:?}: relative deficit {:e}", r.suite, rep.manifold.label(), rep.profile, rep.params, rep.relative_deficit)
        })?;
        let e = by_suite.entry(r.suite.as_str()).or_insert((0, f64::INFINITY));
        e.0 += 1;
        e.1 = e.1.min(rep.relative_deficit);
        if r.suite == "ckn" {
            *ckn_grid.entry((rep.manifold.label(), rep.profile.clone())).or_default() += 1;
        }
    }
    ensure(ckn_grid.values().all(|k| *k == 9), || "ckn grid is not 3x3 for every tuple".into())?;
    ensure(by_suite.len() == 4, || format!("suites present: {:?}", by_suite.keys()))?;
    Ok(by_suite
        .iter()
        .map(|(s, (k, w))| format!("{s} {k} (worst {w:+.1e})"))
        .collect::<Vec<_>>()
        .join(", "))
}

fn ckn_identity() -> Outcome {
    let text = format!(
        "suites = [\"ibp\"]\n[params.ibp]\na = [0.0, 0.2, 0.4]\n{MODELS}{EXACT_CONE}\n\
         [[corpus]]\nfamily = \"annulus\"\nr_in = [0.5, 1.0]\nr_out = 2.0\nk = [3.0, 4.0]\n"
    );
    let records = run_config(&text)?;
    ensure(records.len() == 8 * 4 * 3, || format!("{} reports", records.len()))?;
    let (mut worst, mut worst_closed) = (0.0f64, 0.0f64);
    for r in &records {
        let rep = &r.report;
        let mismatch = rep.relative_deficit.abs();
        ensure(mismatch < 1e-6, || format!("{} {} {:?}: mismatch {mismatch:e}", rep.manifold.label(), rep.profile, rep.params))?;
        worst = worst.max(mismatch);
        if rep.theta == 1.0 && rep.manifold.c.is_none() {
            let closed = *rep.details.get("closed_form_mismatch").ok_or("missing closed form")?;
            ensure(closed < 1e-6, || format!("{} {}: closed form mismatch {closed:e}", rep.manifold.label(), rep.profile))?;
            worst_closed = worst_closed.max(closed);
        }
    }
    Ok(format!("mismatch {worst:.1e}, Euclidean closed form {worst_closed:.1e}"))
}

fn avr_and_bishop_gromov() -> Outcome {
    let mut worst = 0.0f64;
    let mut models = Vec::new();
    for n in [3, 4, 5] {
        models.push(ModelManifold::euclidean(n, 50.0).map_err(|e| e.to_string())?);
        models.push(ModelManifold::exact_cone(n, 0.7, 50.0).map_err(|e| e.to_string())?);
        for c in [0.5, 0.8] {
            for delta in [0.5, 1.0, 2.0] {
                let m = ModelManifold::smoothed_cone(n, c, delta, 50.0 * delta.max(1.0)).map_err(|e| e.to_string())?;
                let theta = m.avr().map_err(|e| e.to_string())?;
                let exact = c.powi(n as i32 - 1);
                let d = (theta - exact).abs();
                ensure(d <= 1e-6, || format!("c={c} delta={delta} n={n}: {theta} vs {exact}"))?;
                worst = worst.max(d);
                models.push(m);
            }
        }
    }
    for m in &models {
        let radii: Vec<f64> = (0..64).map(|i| 1e-3 * (m.r_max() / 1e-3).powf(i as f64 / 63.0)).collect();
        let rep = bishop_gromov_check(m, &radii).map_err(|e| e.to_string())?;
        ensure(rep.pass, || format!("{}: ratios {:?}", m.spec().label(), rep.ratios))?;
    }
    Ok(format!("avr error {worst:.1e}, {} models monotone", models.len()))
}

fn constant_estimation() -> Outcome {
    let search = SearchSettings {
        seed: 20240601,
        ..Default::default()
    };
    let hardy = estimate_chs(3, 2.0, 2.0, &search).map_err(|e| e.to_string())?;
    let d_hardy = (hardy.value / 0.25 - 1.0).abs();
    ensure(d_hardy < 1e-2, || format!("s=2: {} vs 0.25", hardy.value))?;
    let oracle = common::lieb_constant(3, 0.0);
    let first = estimate_chs(3, 2.0, 0.0, &search).map_err(|e| e.to_string())?;
    let d_sob = (first.value / oracle - 1.0).abs();
    ensure(d_sob < 1e-2, || format!("s=0: {} vs {oracle}", first.value))?;
    let second = estimate_chs(3, 2.0, 0.0, &search).map_err(|e| e.to_string())?;
    let (a, b) = (
        serde_json::to_string(&first).map_err(|e| e.to_string())?,
        serde_json::to_string(&second).map_err(|e| e.to_string())?,
    );
    ensure(a == b, || format!("runs differ: {a} vs {b}"))?;
    Ok(format!("s=2 off by {:.2}%, s=0 off by {:.3}%, repeat identical", 100.0 * d_hardy, 100.0 * d_sob))
}

/// Tuples before filtering, counted from the configuration alone.
fn expected_tuples(cfg: &RunConfig) -> usize {
    let manifolds: usize = cfg.manifolds.iter().map(|m| m.n.to_vec().len()).sum();
    let corpus: usize = cfg
        .corpus
        .iter()
        .map(|f| f.params.values().map(|v| v.to_vec().len()).product::<usize>())
        .sum();
    let g = &cfg.params;
    cfg.suites
        .iter()
        .map(|s| match s {
            Suite::Ps => g.ps.p.len() * corpus,
            Suite::Lemmas => g.lemmas.p.len() * g.lemmas.weight_exponents.len() * corpus,
            Suite::Hardy => g.hardy.p.len() * corpus,
            Suite::Hpw => corpus,
            Suite::Hs => g.hs.p.len() * g.hs.s_fractions.len() * corpus,
            Suite::Ckn => {
                let a = g.ckn.a.as_ref().map_or(g.ckn.a_fractions.len(), Vec::len);
                a * g.ckn.b_offsets.len() * corpus
            }
            Suite::Ibp => g.ibp.a.len() * corpus,
            Suite::Bg => 1,
        })
        .sum::<usize>()
        * manifolds
}

fn end_to_end() -> Outcome {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..");
    let config = root.join("configs/default.toml");
    let cfg = RunConfig::parse(&fs::read_to_string(&config).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let expected = expected_tuples(&cfg);
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for k in 0..2 {
        let dir = tmp.path().join(format!("run{k}"));
        let status = Command::new(env!("CARGO_BIN_EXE_sharp-ineq"))
            .arg("verify")
            .arg("--suites")
            .arg("all")
            .arg("--config")
            .arg(&config)
            .arg("--out")
            .arg(&dir)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(status.status.code() == Some(0), || {
            format!("exit {:?}: {}", status.status.code(), String::from_utf8_lossy(&status.stderr))
        })?;
        let jsonl = fs::read(dir.join(output::JSONL_FILE)).map_err(|e| e.to_string())?;
        let summary: Summary = serde_json::from_slice(&fs::read(dir.join(output::SUMMARY_FILE)).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        outputs.push((jsonl, summary));
    }
    let (jsonl, summary) = &outputs[0];
    let lines = jsonl.split(|b| *b == b'\n').filter(|l| !l.is_empty()).count();
    ensure(summary.tuples == expected, || format!("summary counts {} tuples, configuration gives {expected}", summary.tuples))?;
    ensure(summary.skipped.len() <= summary.filtered, || "filtered tuples without a logged reason".into())?;
    ensure(lines == expected - summary.filtered, || {
        format!("{lines} reports, expected {expected} - {} filtered", summary.filtered)
    })?;
    ensure(outputs[0].0 == outputs[1].0, || "reports.jsonl differs between runs".into())?;
    Ok(format!("{lines} reports = {expected} - {} filtered, rerun byte-identical", summary.filtered))
}

fn main() {
    let criteria: [(&str, u64, fn() -> Outcome); 10] = [
        ("euclidean self-consistency", 5, euclidean_self_consistency),
        ("hpw equality case", 1, hpw_equality),
        ("hardy sharpness", 10, hardy_sharpness),
        ("polya-szego grid", 60, polya_szego_grid),
        ("weighted lemma grid", 60, lemma_grid),
        ("theorem suites", 300, theorem_suites),
        ("ckn integration by parts", 10, ckn_identity),
        ("avr and bishop-gromov", 5, avr_and_bishop_gromov),
        ("constant estimation", 60, constant_estimation),
        ("end-to-end verify", 300, end_to_end),
    ];
    let mut failed = 0;
    for (i, (name, limit, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let limit = Duration::from_secs(*limit);
        let (ok, detail) = match outcome {
            Ok(d) if elapsed <= limit => (true, d),
            Ok(d) => (false, format!("{d}; over the time limit")),
            Err(e) => (false, e),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{} {:>2} {:<28} {:>7.2}s / {:>3}s  {}",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            name,
            elapsed.as_secs_f64(),
            limit.as_secs(),
            detail
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all 10 criteria passed");
}

use std::fs;
use std::io::{BufReader, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use sharp_ineq::constants::{estimate_chs, SearchSettings};
use sharp_ineq::driver::{self, output, Plan, RunConfig, Suite};
use sharp_ineq::functionals::lp_norm;
use sharp_ineq::manifold::ManifoldSpec;
use sharp_ineq::radial::RadialProfile;
use sharp_ineq::rearrange::rearrange;
use sharp_ineq::Error;

#[derive(Parser)]
#[command(name = "sharp-ineq", version, about = "Verify sharp functional inequalities on model manifolds")]
struct Cli {
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the suites of a configuration file and write reports.
    Verify(VerifyArgs),
    /// Print the asymptotic volume ratio of a catalog manifold.
    Theta(ManifoldArgs),
    /// Rearrange a two-column profile file.
    Rearrange(RearrangeArgs),
    /// Estimate the Hardy-Sobolev constant C_HS(s, p) on R^n.
    EstimateChs(ChsArgs),
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value = "configs/default.toml")]
    config: PathBuf,
    /// Comma-separated suites, overriding the file (ps, lemmas, hardy,
    /// hpw, hs, ckn, ibp, bg, all).
    #[arg(long, value_delimiter = ',')]
    suites: Option<Vec<String>>,
    /// Output directory, overriding the file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Search seed, overriding the file.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ManifoldArgs {
    /// `euclidean`, `cone(c,delta)` or `exact_cone(c)`.
    #[arg(long)]
    manifold: String,
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long)]
    r_max: Option<f64>,
}

#[derive(Args)]
struct RearrangeArgs {
    /// Whitespace-separated `r u` lines.
    #[arg(long = "in")]
    input: PathBuf,
    #[command(flatten)]
    manifold: ManifoldArgs,
    /// Where to write `ρ u*(ρ)` lines; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print norms of u and u* as JSON on stdout.
    #[arg(long)]
    report: bool,
}

#[derive(Args)]
struct ChsArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    s: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Objective evaluations per restart.
    #[arg(long, default_value_t = 2000)]
    budget: usize,
    #[arg(long, default_value_t = 5)]
    restarts: usize,
}

fn exit_for(e: &Error) -> u8 {
    if e.is_numerical() {
        3
    } else {
        2
    }
}

fn verify(args: VerifyArgs) -> Result<u8, Error> {
    let text = fs::read_to_string(&args.config)?;
    let mut cfg = RunConfig::parse(&text)?;
    if let Some(s) = args.suites {
        cfg.suites = Suite::parse_list(&s)?;
    }
    if let Some(dir) = args.out {
        cfg.output.dir = dir;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let plan = Plan::new(cfg)?;
    log::info!("{} tuples, {} filtered", plan.tasks.len(), plan.skipped.len());
    let out = driver::run(&plan);
    output::emit(&out, &plan.config.output.dir, &plan.config.output.formats)?;
    let s = &out.summary;
    let mut stdout = std::io::stdout().lock();
    for (name, suite) in &s.suites {
        writeln!(
            stdout,
            "{name:<7} reports {:>5}  passed {:>5}  failed {:>3}  errors {:>3}  worst relative deficit {:+.3e}",
            suite.reports,
            suite.passed,
            suite.failed,
            suite.errors,
            suite.worst_relative_deficit.unwrap_or(0.0)
        )?;
    }
    writeln!(
        stdout,
        "total   reports {:>5}  passed {:>5}  failed {:>3}  errors {:>3}  filtered {}",
        s.reports, s.passed, s.failed, s.errors, s.filtered
    )?;
    Ok(s.exit_code() as u8)
}

fn theta(args: ManifoldArgs) -> Result<u8, Error> {
    #[derive(Serialize)]
    struct Out {
        manifold: String,
        n: usize,
        theta: f64,
    }
    let spec = ManifoldSpec::parse_catalog(&args.manifold, args.n, args.r_max)?;
    let m = spec.build()?;
    let out = Out {
        manifold: spec.label(),
        n: args.n,
        theta: m.avr()?,
    };
    println!("{}", serde_json::to_string(&out)?);
    Ok(0)
}

fn rearrange_cmd(args: RearrangeArgs) -> Result<u8, Error> {
    #[derive(Serialize)]
    struct Norm {
        p: f64,
        u: f64,
        ustar: f64,
    }
    #[derive(Serialize)]
    struct Out {
        manifold: String,
        theta: f64,
        support_radius: f64,
        rearranged_support_radius: f64,
        norms: Vec<Norm>,
    }
    let spec = ManifoldSpec::parse_catalog(&args.manifold.manifold, args.manifold.n, args.manifold.r_max)?;
    let m = spec.build()?;
    let file = fs::File::open(&args.input)?;
    let tag = args.input.display().to_string();
    let u = RadialProfile::read_two_column(BufReader::new(file), tag)?;
    let ustar = rearrange(&u, &m)?;
    match &args.out {
        Some(path) => ustar.write_two_column(fs::File::create(path)?)?,
        None => ustar.write_two_column(std::io::stdout().lock())?,
    }
    if args.report {
        let e = m.euclidean_companion();
        let mut norms = Vec::new();
        for p in [1.0, 2.0] {
            norms.push(Norm {
                p,
                u: lp_norm(&u, &m, p)?.value,
                ustar: lp_norm(&ustar, &e, p)?.value,
            });
        }
        let out = Out {
            manifold: spec.label(),
            theta: m.avr()?,
            support_radius: u.support_radius(),
            rearranged_support_radius: ustar.support_radius(),
            norms,
        };
        println!("{}", serde_json::to_string(&out)?);
    }
    Ok(0)
}

fn estimate(args: ChsArgs) -> Result<u8, Error> {
    let search = SearchSettings {
        seed: args.seed,
        max_evals: args.budget,
        restarts: args.restarts,
        ..Default::default()
    };
    let est = estimate_chs(args.n, args.p, args.s, &search)?;
    println!("{}", serde_json::to_string(&est)?);
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();
    let result = match cli.command {
        Command::Verify(a) => verify(a),
        Command::Theta(a) => theta(a),
        Command::Rearrange(a) => rearrange_cmd(a),
        Command::EstimateChs(a) => estimate(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}

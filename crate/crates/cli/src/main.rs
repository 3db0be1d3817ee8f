use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use gh_simplex::curve::curve;
use gh_simplex::gh::{gh_dispatch, DispatchOptions, Estimate, GhError, RouteChoice, SimplexSize};
use gh_simplex::metric::{
    gen_random_metric, gen_random_ultrametric, FiniteMetricSpace, MetricError, Tolerance,
};
use gh_simplex::mst::{build_mst, is_ultrametric_via_mst};
use gh_simplex::partition::{ad_cloud, EnumerationCap, PartitionError};
use gh_simplex::selftest::{Fault, SelftestConfig};

#[derive(Parser, Debug)]
#[command(name = "gh-simplex", version, about = "Gromov-Hausdorff distances from finite metric spaces to simplexes")]
struct Cli {
    /// Comparison tolerance for every inequality test.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,

    /// Largest point count allowed for partition enumeration.
    #[arg(long, global = true, env = "GH_SIMPLEX_CAP")]
    cap: Option<usize>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Plain)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Plain,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct Source {
    /// Distance matrix file (`.json`, otherwise CSV).
    #[arg(long, value_name = "PATH")]
    input: Option<PathBuf>,

    /// Generate a random metric space on N points.
    #[arg(long, value_name = "N")]
    random_metric: Option<usize>,

    /// Generate a random ultrametric space on N points.
    #[arg(long, value_name = "N")]
    random_ultrametric: Option<usize>,
}

#[derive(Args, Debug)]
struct Input {
    #[command(flatten)]
    source: Source,

    /// Seed for the generators.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the metric axioms and report basic invariants.
    Validate(Input),
    /// Minimal spanning tree and its spectrum.
    Mst(Input),
    /// The (alpha, d) cloud of all partitions into m blocks and its extremes.
    Cloud {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        m: usize,
    },
    /// 2 d_GH(lambda Delta_m, X) by the best available route.
    Dist {
        #[command(flatten)]
        input: Input,
        /// Simplex size: a positive integer, or ">n".
        #[arg(long)]
        m: SimplexSize,
        #[arg(long)]
        lambda: f64,
        /// Recompute by brute force and report the discrepancy.
        #[arg(long)]
        verify: bool,
        /// auto, ultra, closed, extreme, collective or bruteforce.
        #[arg(long, default_value = "auto")]
        route: RouteChoice,
    },
    /// Breakpoints of lambda -> 2 d_GH(lambda Delta_m, X).
    Curve {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        m: usize,
        /// Write the breakpoint CSV here.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Cross-validate every route on generated spaces.
    Selftest {
        /// Ten spaces per suite, at most five points.
        #[arg(long)]
        quick: bool,
        /// Spaces per suite.
        #[arg(long)]
        spaces: Option<u64>,
        /// Largest generated space.
        #[arg(long)]
        max_n: Option<usize>,
        #[arg(long, hide = true)]
        inject_fault: Option<FaultArg>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FaultArg {
    Ultra,
}

/// Exit status plus message.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn domain(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }

    fn usage(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }
}

impl From<MetricError> for Failure {
    fn from(e: MetricError) -> Self {
        match e {
            MetricError::Parse(_) | MetricError::Io(_) | MetricError::BadTolerance(_) => {
                Failure::usage(e.to_string())
            }
            _ => Failure::domain(format!("invalid: {e}")),
        }
    }
}

impl From<GhError> for Failure {
    fn from(e: GhError) -> Self {
        match e {
            GhError::Metric(m) => m.into(),
            GhError::Partition(_) | GhError::BadLambda(_) | GhError::NeedsFiniteM(_) | GhError::NoClosedForm { .. } => {
                Failure::usage(e.to_string())
            }
            GhError::NotUltrametric | GhError::CollectiveOrder { .. } => Failure::domain(e.to_string()),
        }
    }
}

impl From<PartitionError> for Failure {
    fn from(e: PartitionError) -> Self {
        Failure::usage(e.to_string())
    }
}

struct Ctx {
    tol: Tolerance,
    cap: EnumerationCap,
    format: Format,
}

fn load(input: &Input, tol: Tolerance) -> Result<FiniteMetricSpace, Failure> {
    let src = &input.source;
    if let Some(path) = &src.input {
        return Ok(FiniteMetricSpace::load(path, tol)?);
    }
    let check = |n: usize| if n == 0 { Err(Failure::usage("need at least one point")) } else { Ok(n) };
    if let Some(n) = src.random_metric {
        return Ok(gen_random_metric(check(n)?, input.seed));
    }
    if let Some(n) = src.random_ultrametric {
        return Ok(gen_random_ultrametric(check(n)?, input.seed));
    }
    Err(Failure::usage("no input given"))
}

fn cmd_validate(ctx: &Ctx, input: &Input) -> Result<String, Failure> {
    let x = match load(input, ctx.tol) {
        Ok(x) => x,
        Err(f) if f.code == 1 && ctx.format == Format::Json => {
            println!("{}", json!({ "valid": false, "error": f.message }));
            return Err(Failure { code: 1, message: String::new() });
        }
        Err(f) => return Err(f),
    };
    let direct = x.is_ultrametric_direct(ctx.tol);
    let via_mst = x.n() < 2 || is_ultrametric_via_mst(&x, ctx.tol);
    let eps = x.epsilon().ok();
    let eps_text = eps.map_or_else(|| "n/a".to_string(), |e| e.to_string());
    let out = match ctx.format {
        Format::Json => json!({
            "valid": true,
            "n": x.n(),
            "diam": x.diam(),
            "eps": eps,
            "ultrametric_direct": direct,
            "ultrametric_mst": via_mst,
        })
        .to_string(),
        Format::Csv => format!(
            "valid,n,diam,eps,ultrametric_direct,ultrametric_mst\ntrue,{},{},{},{direct},{via_mst}",
            x.n(),
            x.diam(),
            eps_text
        ),
        Format::Plain => {
            let ultra = if direct == via_mst {
                format!("{direct}(both)")
            } else {
                format!("direct:{direct},mst:{via_mst}")
            };
            format!("valid, n={}, diam={}, eps={eps_text}, ultrametric={ultra}", x.n(), x.diam())
        }
    };
    if direct != via_mst {
        println!("{out}");
        return Err(Failure::domain("ultrametric detectors disagree"));
    }
    Ok(out)
}

fn cmd_mst(ctx: &Ctx, input: &Input) -> Result<String, Failure> {
    let x = load(input, ctx.tol)?;
    let tree = build_mst(&x);
    let sigma = tree.spectrum();
    Ok(match ctx.format {
        Format::Json => json!({ "edges": tree.edges(), "sigma": sigma }).to_string(),
        Format::Csv => {
            let mut out = String::from("i,j,len");
            for e in tree.edges() {
                let _ = write!(out, "\n{},{},{}", e.i, e.j, e.length);
            }
            out
        }
        Format::Plain => {
            let labels = x.labels();
            let mut out = String::new();
            for e in tree.edges() {
                let _ = writeln!(out, "{} - {}: {}", labels[e.i], labels[e.j], e.length);
            }
            let s: Vec<String> = sigma.as_slice().iter().map(f64::to_string).collect();
            let _ = write!(out, "sigma: ({})", s.join(", "));
            out
        }
    })
}

fn cmd_cloud(ctx: &Ctx, input: &Input, m: usize) -> Result<String, Failure> {
    let x = load(input, ctx.tol)?;
    let cloud = ad_cloud(&x, m, ctx.cap, ctx.tol)?;
    Ok(match ctx.format {
        Format::Json => serde_json::to_string(&cloud).expect("cloud serializes"),
        Format::Csv | Format::Plain => {
            let mut out = String::from("alpha,d,is_extreme");
            for p in &cloud.points {
                let _ = write!(out, "\n{},{},{}", p.alpha, p.d, cloud.is_extreme(p));
            }
            out
        }
    })
}

fn estimate_text(e: Estimate) -> String {
    e.to_string()
}

fn cmd_dist(
    ctx: &Ctx,
    input: &Input,
    m: SimplexSize,
    lambda: f64,
    verify: bool,
    route: RouteChoice,
) -> Result<String, Failure> {
    let x = load(input, ctx.tol)?;
    let opts = DispatchOptions { route, verify, cap: ctx.cap, tol: ctx.tol };
    let report = gh_dispatch(&x, m, lambda, opts)?;
    let disc_text = report.discrepancy.map_or_else(|| "n/a".to_string(), |d| d.to_string());
    let out = match ctx.format {
        Format::Json => serde_json::to_string(&report).expect("report serializes"),
        Format::Csv => format!(
            "two_d_gh,d_gh,route,verified,discrepancy\n\"{}\",\"{}\",{},{},{}",
            estimate_text(report.value.estimate),
            estimate_text(report.value.halved()),
            report.value.route,
            report.verified,
            disc_text
        ),
        Format::Plain => {
            let mut out = format!(
                "two_d_gh={} d_gh={} route={}",
                estimate_text(report.value.estimate),
                estimate_text(report.value.halved()),
                report.value.route
            );
            if verify {
                let _ = write!(out, " verified={} discrepancy={disc_text}", report.verified);
            }
            out
        }
    };
    if report.check_ran() && !report.verified {
        println!("{out}");
        return Err(Failure::domain(format!("verification failed: discrepancy {disc_text}")));
    }
    Ok(out)
}

fn cmd_curve(ctx: &Ctx, input: &Input, m: usize, out: Option<&PathBuf>) -> Result<String, Failure> {
    let x = load(input, ctx.tol)?;
    let c = curve(&x, m, ctx.cap, ctx.tol)?;
    let csv = c.to_csv(m, x.diam());
    if let Some(path) = out {
        std::fs::write(path, &csv)
            .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(match ctx.format {
        Format::Json => serde_json::to_string(&c).expect("curve serializes"),
        Format::Csv if out.is_some() => String::new(),
        Format::Csv => csv.trim_end().to_string(),
        Format::Plain => c.summary().trim_end().to_string(),
    })
}

fn cmd_selftest(
    ctx: &Ctx,
    quick: bool,
    spaces: Option<u64>,
    max_n: Option<usize>,
    fault: Option<FaultArg>,
) -> Result<String, Failure> {
    let mut cfg = if quick { gh_simplex::selftest::quick() } else { SelftestConfig::default() };
    cfg.cap = ctx.cap;
    cfg.tol = ctx.tol;
    if let Some(s) = spaces {
        cfg.spaces = s;
    }
    if let Some(n) = max_n {
        cfg.max_n = n;
    }
    cfg.fault = fault.map(|FaultArg::Ultra| Fault::UltraOffset);
    let result = cfg.run(|r| println!("{}: {} cases ok", r.name, r.cases));
    match result {
        Ok(reports) => Ok(format!("selftest passed: {} suites", reports.len())),
        Err(replay) => {
            println!("FAIL {}: {}", replay.suite, replay.detail);
            println!("replay: {}", replay.to_json());
            Err(Failure::domain("selftest failed"))
        }
    }
}

fn run(cli: Cli) -> Result<String, Failure> {
    let tol = Tolerance::new(cli.tol).map_err(|e| Failure::usage(e.to_string()))?;
    let cap = cli.cap.map_or(EnumerationCap::DEFAULT, EnumerationCap);
    let ctx = Ctx { tol, cap, format: cli.format };
    match &cli.command {
        Command::Validate(input) => cmd_validate(&ctx, input),
        Command::Mst(input) => cmd_mst(&ctx, input),
        Command::Cloud { input, m } => cmd_cloud(&ctx, input, *m),
        Command::Dist { input, m, lambda, verify, route } => {
            cmd_dist(&ctx, input, *m, *lambda, *verify, *route)
        }
        Command::Curve { input, m, out } => cmd_curve(&ctx, input, *m, out.as_ref()),
        Command::Selftest { quick, spaces, max_n, inject_fault } => {
            cmd_selftest(&ctx, *quick, *spaces, *max_n, *inject_fault)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            if !out.is_empty() {
                println!("{out}");
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}

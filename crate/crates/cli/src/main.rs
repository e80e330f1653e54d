use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use log::info;
use serde_json::json;

use transship::approx::Approximator;
use transship::boost::{solve_with, ResidualRouter, SolveConfig, SolveReport};
use transship::error::SolveError;
use transship::exact::{exact_opt, DEFAULT_LIMIT};
use transship::gen::{generate, Family};
use transship::graph::{flow_cost, is_routing, max_violation, Instance, ROUTING_TOL};
use transship::io;

#[derive(Parser)]
#[command(name = "tship", version, about = "Approximate transshipment solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Router {
    Mst,
    Approximator,
}

#[derive(Clone, Copy, ValueEnum)]
enum DiagKind {
    Layers,
    Oracle,
    Approx,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Path,
    Cycle,
    Grid,
    Random,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Family {
        match f {
            FamilyArg::Path => Family::Path,
            FamilyArg::Cycle => Family::Cycle,
            FamilyArg::Grid => Family::Grid,
            FamilyArg::Random => Family::Random,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance to within a factor 1+eps.
    Solve {
        input: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        /// Write the flow file here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Router::Mst)]
        residual_router: Router,
        #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
        report: ReportFormat,
    },
    /// Check that a flow routes the demands and recompute its cost.
    Verify {
        instance: PathBuf,
        flow: PathBuf,
        /// Also compare against the exact optimum (small instances only).
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Dump internals of the approximator.
    Diag {
        instance: PathBuf,
        #[arg(value_enum)]
        what: DiagKind,
    },
    /// Time generated instances and write one CSV row per size.
    Bench {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 0.25)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        csv: PathBuf,
    },
    /// Write a generated instance.
    Gen {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Outcome of a command that ran to completion.
enum Outcome {
    Pass,
    Fail,
    NotConverged,
}

fn read_instance(path: &Path) -> Result<Instance> {
    let text = fs::read_to_string(path).with_context(|| format!("IoError: cannot read {}", path.display()))?;
    Ok(io::parse_instance(&text)?)
}

fn report_json(report: &SolveReport) -> serde_json::Value {
    json!({
        "cost": report.cost,
        "approx_cost_bound": report.approx_cost_bound,
        "certified_ratio": report.certified_ratio,
        "lower_bound": report.lower_bound,
        "dual_ratio": report.dual_ratio,
        "rounds": report.rounds,
        "iterations": report.iterations,
        "residual_norm": report.residual_norm,
        "residual_target": report.residual_target,
        "wall_time": report.wall_time,
    })
}

fn solve_cmd(input: &Path, eps: f64, out: Option<&Path>, router: Router, format: ReportFormat) -> Result<Outcome> {
    let instance = read_instance(input)?;
    let config = SolveConfig {
        eps,
        residual_router: match router {
            Router::Mst => ResidualRouter::Mst,
            Router::Approximator => ResidualRouter::Approximator,
        },
        ..SolveConfig::default()
    };
    let ap = Approximator::build(&instance)?;
    let (report, outcome) = match solve_with(&instance, &ap, &config) {
        Ok(report) => (report, Outcome::Pass),
        Err(SolveError::NotConverged { partial, .. }) => {
            eprintln!("NotConverged: residual target missed, writing partial flow");
            (*partial, Outcome::NotConverged)
        }
        Err(e) => return Err(e.into()),
    };
    if let Some(path) = out {
        fs::write(path, io::render_flow(&instance, &report.flow))
            .with_context(|| format!("IoError: cannot write {}", path.display()))?;
    }
    match format {
        ReportFormat::Text => print!("{}", io::render_report(&report)),
        ReportFormat::Json => println!("{}", report_json(&report)),
    }
    Ok(outcome)
}

fn verify_cmd(instance_path: &Path, flow_path: &Path, eps: Option<f64>) -> Result<Outcome> {
    let instance = read_instance(instance_path)?;
    let text = fs::read_to_string(flow_path).with_context(|| format!("IoError: cannot read {}", flow_path.display()))?;
    let parsed = io::parse_flow(&text, &instance)?;
    let edges = instance.edges();
    let demands = instance.demands();
    let cost = flow_cost(&parsed.flow, edges);
    let scale: f64 = demands.iter().map(|x| x.abs()).sum();
    let mut ok = true;
    println!("cost {}", io::real(cost));
    if is_routing(&parsed.flow, demands, edges, ROUTING_TOL) {
        println!("routing ok");
    } else {
        let (v, amount) = max_violation(demands, edges, &parsed.flow);
        println!("RoutingViolation: vertex {} off by {}", v + 1, io::real(amount));
        ok = false;
    }
    if let Some(stated) = parsed.stated_cost {
        let slack = ROUTING_TOL * cost.abs().max(stated.abs()).max(f64::MIN_POSITIVE);
        if (stated - cost).abs() > slack {
            println!("CostMismatch: trailer {} recomputed {}", io::real(stated), io::real(cost));
            ok = false;
        }
    }
    if let Some(eps) = eps {
        if instance.n() > DEFAULT_LIMIT {
            println!("exact check skipped: n = {} above {}", instance.n(), DEFAULT_LIMIT);
        } else {
            let opt = exact_opt(&instance)?.opt_value;
            let limit = (1.0 + eps) * opt + ROUTING_TOL * scale * instance.max_cost();
            println!("opt {}", io::real(opt));
            if cost > limit {
                println!("ApproximationFailed: cost exceeds (1+eps) * opt");
                ok = false;
            } else {
                println!("within 1+eps of optimum");
            }
        }
    }
    Ok(if ok { Outcome::Pass } else { Outcome::Fail })
}

fn diag_cmd(path: &Path, what: DiagKind) -> Result<Outcome> {
    let instance = read_instance(path)?;
    let ap = Approximator::build(&instance)?;
    match what {
        DiagKind::Layers => print!("{}", io::render_layers(ap.layers())),
        DiagKind::Oracle => print!("{}", io::render_oracles(&ap)),
        DiagKind::Approx => print!("{}", io::render_approx_stats(&ap.stats())),
    }
    Ok(Outcome::Pass)
}

fn bench_cmd(family: Family, sizes: &[usize], eps: f64, seed: u64, csv_path: &Path) -> Result<Outcome> {
    let mut writer = csv::Writer::from_path(csv_path).with_context(|| format!("IoError: cannot write {}", csv_path.display()))?;
    writer.write_record([
        "n", "m", "build_time", "apply_P_time", "solve_time", "iterations", "cost", "opt", "ratio",
    ])?;
    let config = SolveConfig::with_eps(eps);
    let mut outcome = Outcome::Pass;
    for &size in sizes {
        if size < 4 {
            bail!("TooSmall: bench size {size} is below 4");
        }
        let instance = generate(family, size, seed);
        let start = Instant::now();
        let ap = Approximator::build(&instance)?;
        let build_time = start.elapsed().as_secs_f64();
        let start = Instant::now();
        let norm = ap.norm(instance.demands());
        let apply_time = start.elapsed().as_secs_f64();
        let start = Instant::now();
        let report = match solve_with(&instance, &ap, &config) {
            Ok(r) => r,
            Err(SolveError::NotConverged { partial, .. }) => {
                outcome = Outcome::NotConverged;
                *partial
            }
            Err(e) => return Err(e.into()),
        };
        let solve_time = start.elapsed().as_secs_f64();
        let opt = if instance.n() <= DEFAULT_LIMIT {
            Some(exact_opt(&instance)?.opt_value)
        } else {
            None
        };
        info!("bench n={} ||Pb||={norm:e} cost={:e}", instance.n(), report.cost);
        let ratio = opt.map(|o| if o > 0.0 { report.cost / o } else { 1.0 });
        writer.write_record([
            instance.n().to_string(),
            instance.m().to_string(),
            format!("{build_time:.6}"),
            format!("{apply_time:.6}"),
            format!("{solve_time:.6}"),
            report.iterations.to_string(),
            io::real(report.cost),
            opt.map(io::real).unwrap_or_default(),
            ratio.map(io::real).unwrap_or_default(),
        ])?;
    }
    writer.flush()?;
    Ok(outcome)
}

fn gen_cmd(family: Family, n: usize, seed: u64, out: &Path) -> Result<Outcome> {
    if n < 4 {
        bail!("TooSmall: instance size {n} is below 4");
    }
    let instance = generate(family, n, seed);
    fs::write(out, io::render_instance(&instance)).with_context(|| format!("IoError: cannot write {}", out.display()))?;
    Ok(Outcome::Pass)
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Solve {
            input,
            eps,
            out,
            residual_router,
            report,
        } => solve_cmd(&input, eps, out.as_deref(), residual_router, report),
        Command::Verify { instance, flow, eps } => verify_cmd(&instance, &flow, eps),
        Command::Diag { instance, what } => diag_cmd(&instance, what),
        Command::Bench {
            family,
            sizes,
            eps,
            seed,
            csv,
        } => bench_cmd(family.into(), &sizes, eps, seed, &csv),
        Command::Gen { family, n, seed, out } => gen_cmd(family.into(), n, seed, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TSHIP_LOG", "error")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Ok(Outcome::NotConverged) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

//! `dragmc`: run samplers on the test problems and write chains, reports and
//! comparison tables.
//!
//! Exit status is 0 on success, 2 for configuration errors and 1 for any
//! other failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dragmc::harness::{
    db_check, emit_acf_comparison, emit_figure1, run_experiment, standard_methods, ExperimentConfig,
    Figure1Config, Method, SharedSettings,
};
use dragmc::testbed::Problem;
use dragmc::Error;

/// Balance tolerance for `db-check`.
const BALANCE_TOL: f64 = 1e-12;

#[derive(Parser, Debug)]
#[command(name = "dragmc", version, about = "Metropolis sampling with dragged fast variables")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one chain and write chain.csv and report.json.
    Run(RunArgs),
    /// Write a 1000-point scatter sample of the first test distribution.
    Fig1(Fig1Args),
    /// Compare autocorrelations of several methods on one problem.
    AcfCompare(AcfArgs),
    /// Check detailed balance of the dragging update exactly on the discrete model.
    DbCheck(DbArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// JSON config file; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<Problem>,
    #[arg(long)]
    method: Option<Method>,
    /// Ladder segments for the drag method.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    outer_sd: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    inner_sd: Option<Vec<f64>>,
    #[arg(long)]
    inner_steps: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    /// Fraction of iterations discarded as burn-in.
    #[arg(long)]
    burnin: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_lag: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    slow_delay_us: Option<u64>,
}

#[derive(Args, Debug)]
struct Fig1Args {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    points: usize,
    #[arg(long, default_value_t = 20)]
    thin: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct AcfArgs {
    #[arg(long, default_value = "test1")]
    problem: Problem,
    /// Methods to compare, e.g. `joint,single,marginal,drag-20`; defaults to
    /// the six standard settings.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    burnin: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_lag: Option<usize>,
    #[arg(long)]
    slow_delay_us: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Also write acf.svg.
    #[arg(long)]
    svg: bool,
}

#[derive(Args, Debug)]
struct DbArgs {
    #[arg(long, default_value = "discrete")]
    problem: Problem,
    /// Ladder sizes to check.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    n: Vec<usize>,
}

fn run_config(args: RunArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_json_file(path)?,
        None => {
            let problem = args
                .problem
                .ok_or_else(|| Error::Config("problem: required without --config".into()))?;
            let method = args
                .method
                .ok_or_else(|| Error::Config("method: required without --config".into()))?;
            ExperimentConfig::standard(problem, method, args.n)
        }
    };
    if let Some(p) = args.problem {
        cfg.problem = p;
    }
    if let Some(m) = args.method {
        cfg.method = m;
        if m != Method::Drag && args.n.is_none() {
            cfg.n = None;
        }
    }
    if args.n.is_some() {
        cfg.n = args.n;
    }
    if let Some(v) = args.outer_sd {
        cfg.outer_sd = v;
    }
    if let Some(v) = args.inner_sd {
        cfg.inner_sd = v;
    }
    if let Some(v) = args.inner_steps {
        cfg.inner_steps_per_level = v;
    }
    if let Some(v) = args.iters {
        cfg.iterations = v;
    }
    if let Some(v) = args.burnin {
        cfg.burn_in = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.max_lag {
        cfg.max_lag = v;
    }
    if let Some(v) = args.slow_delay_us {
        cfg.slow_delay_us = v;
    }
    if args.out.is_some() {
        cfg.out_dir = args.out;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_method_label(problem: Problem, label: &str) -> Result<ExperimentConfig, Error> {
    match label.strip_prefix("drag-") {
        Some(n) => {
            let n = n
                .parse()
                .map_err(|_| Error::Config(format!("methods: bad ladder size in {label:?}")))?;
            Ok(ExperimentConfig::standard(problem, Method::Drag, Some(n)))
        }
        None => {
            let method: Method = label.parse()?;
            Ok(ExperimentConfig::standard(problem, method, None))
        }
    }
}

fn execute(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Run(args) => {
            let cfg = run_config(args)?;
            let out = run_experiment(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&out.report)?);
            Ok(true)
        }
        Command::Fig1(args) => {
            let cfg = Figure1Config {
                seed: args.seed,
                points: args.points,
                thin: args.thin,
                out_dir: Some(args.out.clone()),
                ..Figure1Config::default()
            };
            let pts = emit_figure1(&cfg)?;
            println!("wrote {} points to {}", pts.len(), args.out.join("fig1.csv").display());
            Ok(true)
        }
        Command::AcfCompare(args) => {
            let methods = match &args.methods {
                Some(labels) => labels
                    .iter()
                    .map(|l| parse_method_label(args.problem, l))
                    .collect::<Result<Vec<_>, _>>()?,
                None => standard_methods(args.problem),
            };
            let shared = SharedSettings {
                seed: args.seed,
                iterations: args.iters,
                burn_in: args.burnin,
                max_lag: args.max_lag,
                slow_delay_us: args.slow_delay_us,
                out_dir: Some(args.out.clone()),
                svg: args.svg,
            };
            let cmp = emit_acf_comparison(args.problem, &methods, &shared)?;
            println!("{:<10} {:>9} {:>9}  rejection", "method", "iat", "iat(30)");
            for r in &cmp.reports {
                let rates: Vec<String> = r
                    .rejection_rates
                    .iter()
                    .map(|(k, v)| format!("{k}={:.3}", v))
                    .collect();
                println!(
                    "{:<10} {:>9.2} {:>9.2}  {}",
                    r.label,
                    r.summary.iat,
                    r.summary.iat_windowed,
                    rates.join(" ")
                );
            }
            Ok(true)
        }
        Command::DbCheck(args) => {
            if args.problem != Problem::Discrete {
                return Err(Error::Config("problem: db-check only supports the discrete problem".into()));
            }
            let rows = db_check(&args.n)?;
            let mut ok = true;
            for r in &rows {
                let pass = r.max_violation < BALANCE_TOL;
                ok &= pass;
                println!(
                    "n={} states={} max|pi_u P_uv - pi_v P_vu|={:.3e} max_row_sum_error={:.3e} {}",
                    r.n,
                    r.states,
                    r.max_violation,
                    r.max_row_sum_error,
                    if pass { "PASS" } else { "FAIL" }
                );
            }
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

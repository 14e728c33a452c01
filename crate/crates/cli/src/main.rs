mod config;
mod error;
mod experiments;
mod runner;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::runner::Runner;

#[derive(Parser)]
#[command(name = "hypnet", version, about = "Hyperbolic systems with singular coefficients: numerical experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `out` in the config; default `hypnet-out`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all available).
    #[arg(long)]
    jobs: Option<usize>,
    /// Parse and validate the config, then exit without running.
    #[arg(long)]
    check: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Print the experiment catalog.
    List,
    /// Symmetriser certification on an (x, ξ) sample.
    CertifySymmetriser(RunArgs),
    /// Gårding constant search and probe check over the ε-grid.
    GardingProbe(RunArgs),
    /// Single ε-regularized solve.
    Solve(RunArgs),
    /// Association sweep over the ε-grid.
    Associate(RunArgs),
    /// Companion reduction against the direct solve.
    ReduceRoundtrip(RunArgs),
    /// Friedrichs part positivity demonstration.
    FriedrichsDemo(RunArgs),
}

fn run(name: &str, args: &RunArgs) -> Result<Option<PathBuf>, CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| CliError::Io {
        path: args.config.display().to_string(),
        source: e,
    })?;
    let mut cfg = ExperimentConfig::parse(&text)?;
    if let Some(s) = args.seed {
        cfg.seed = Some(s);
    }
    if let Some(j) = args.jobs {
        cfg.jobs = Some(j);
    }
    cfg.validate_for(name)?;
    if args.check {
        return Ok(None);
    }
    let jobs = cfg.jobs.unwrap_or(0);
    if jobs > 0 {
        // Fails only if a pool already exists, which cannot happen in a fresh process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    let out = args
        .out
        .clone()
        .or_else(|| cfg.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("hypnet-out"));
    let mut runner = Runner::new(&out, name, &text, cfg.seed())?;
    experiments::run(name, &cfg, &mut runner)?;
    Ok(Some(runner.out().to_path_buf()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = match &cli.command {
        Command::List => {
            print!("{}", experiments::list_text());
            return ExitCode::SUCCESS;
        }
        Command::CertifySymmetriser(a) => ("certify-symmetriser", a),
        Command::GardingProbe(a) => ("garding-probe", a),
        Command::Solve(a) => ("solve", a),
        Command::Associate(a) => ("associate", a),
        Command::ReduceRoundtrip(a) => ("reduce-roundtrip", a),
        Command::FriedrichsDemo(a) => ("friedrichs-demo", a),
    };
    match run(name, args) {
        Ok(Some(out)) => {
            println!("{name}: done, outputs in {}", out.display());
            ExitCode::SUCCESS
        }
        Ok(None) => {
            println!("{name}: config ok");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("hypnet {name}: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fracstoch_cli::{cmd_localtime, cmd_rate, cmd_report, cmd_sample, cmd_sde, preset, CliError, CliResult, ExperimentConfig, Outcome};

/// Fractional Brownian motion experiments.
#[derive(Parser)]
#[command(name = "fracstoch", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Configuration file (flat key = value).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration: fig1 or fig2.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed of the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; FRACSTOCH_THREADS takes precedence.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a path: path.csv, path.svg.
    Sample(RunArgs),
    /// Local-time curves and cumulative local time.
    Localtime(RunArgs),
    /// Convergence rate of Riemann sums for a germ.
    Rate(RunArgs),
    /// Young SDE uniqueness probes and the threshold table.
    Sde(RunArgs),
    /// Summarize the checks of a run directory.
    Report {
        /// Run directory.
        #[arg(long)]
        out: PathBuf,
    },
}

fn configure_threads(flag: Option<usize>) -> CliResult<()> {
    let env = std::env::var("FRACSTOCH_THREADS").ok();
    let threads = match env {
        Some(v) => Some(v.trim().parse::<usize>().map_err(|_| CliError::Config(format!("FRACSTOCH_THREADS={v:?} is not a count")))?),
        None => flag,
    };
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn load(args: &RunArgs) -> CliResult<ExperimentConfig> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(name)) => preset(name)?,
        (None, None) => ExperimentConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    configure_threads(args.threads)?;
    Ok(cfg)
}

fn run(cli: Cli) -> CliResult<Outcome> {
    match cli.command {
        Command::Sample(a) => cmd_sample(&load(&a)?, &a.out),
        Command::Localtime(a) => cmd_localtime(&load(&a)?, &a.out),
        Command::Rate(a) => cmd_rate(&load(&a)?, &a.out),
        Command::Sde(a) => cmd_sde(&load(&a)?, &a.out),
        Command::Report { out } => cmd_report(&out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            for c in &outcome.checks {
                println!("{} {} = {:e} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value, c.threshold);
            }
            if outcome.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

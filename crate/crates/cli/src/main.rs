use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wavelab_cli::config::{ExperimentConfig, ExperimentKind};
use wavelab_cli::{execute, AppError};

#[derive(Parser)]
#[command(name = "wavelab", version, about = "Water-wave laboratory batch runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve one ensemble at a single amplitude.
    Simulate(Common),
    /// Lifespan proxy against the amplitude ε.
    SweepEpsilon(Common),
    /// Lifespan proxy against the circumference R.
    SweepPeriod(Common),
    /// Dispersive decay and Strichartz scaling of the free flow.
    Strichartz(Common),
    /// Run the validation checks.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` file; unset keys keep their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root of the output tree.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Master seed; overrides the file.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for independent runs (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Start from the N = 64 preset instead of the desk-scale defaults.
    #[arg(long)]
    smoke: bool,
}

fn run(kind: ExperimentKind, args: &Common) -> Result<i32, AppError> {
    let base = if args.smoke {
        ExperimentConfig::smoke()
    } else {
        ExperimentConfig::default()
    };
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_file(path, base)?,
        None => base,
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(jobs) = args.jobs {
        // Only fails if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global();
    }
    let done = execute(kind, &cfg, &args.out)?;
    for line in &done.lines {
        println!("{line}");
    }
    println!("{} → {}", done.verdict.label(), done.directory.display());
    Ok(done.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match &cli.command {
        Command::Simulate(a) => (ExperimentKind::Simulate, a),
        Command::SweepEpsilon(a) => (ExperimentKind::SweepEpsilon, a),
        Command::SweepPeriod(a) => (ExperimentKind::SweepPeriod, a),
        Command::Strichartz(a) => (ExperimentKind::Strichartz, a),
        Command::Validate(a) => (ExperimentKind::Validate, a),
    };
    let code = match run(kind, args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use acx_core::scenario::{self, Format, RunOptions, ScenarioConfig, Stages};
use acx_core::{Error, Execution};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Checks total reality of conormal bundles under the lifted almost complex structure.
#[derive(Parser)]
#[command(name = "acx", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every stage.
    Check(RunArgs),
    /// Structure validation and the Nijenhuis scan only.
    Nijenhuis(RunArgs),
    /// Levi form classification only.
    Levi(RunArgs),
    /// Conormal total-reality scan and its residual suites only.
    TotalReality(RunArgs),
    /// List builtin scenarios.
    List,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file, or the name of a builtin.
    scenario: String,
    #[arg(long, value_enum, default_value_t = OutputFormat::Human)]
    format: OutputFormat,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of surface samples.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Human,
    Records,
}

fn load(spec: &str) -> Result<ScenarioConfig, Error> {
    let path = Path::new(spec);
    if path.exists() {
        return ScenarioConfig::load(path);
    }
    scenario::builtin(spec).map_err(|_| {
        Error::Config(format!("`{spec}` is neither a readable file nor a builtin scenario"))
    })
}

fn execution() -> Result<Execution, Error> {
    let Ok(raw) = std::env::var("ACX_THREADS") else {
        return Ok(Execution::default());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Error::Config(format!("ACX_THREADS must be a positive integer, got `{raw}`")))?;
    if threads == 1 || !Execution::parallel_available() {
        return Ok(Execution::Sequential);
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(Execution::Parallel)
}

fn run(args: &RunArgs, stages: Stages) -> Result<bool, Error> {
    let mut cfg = load(&args.scenario)?;
    if let Some(seed) = args.seed {
        cfg.sampling.seed = seed;
    }
    if let Some(n) = args.samples {
        cfg.sampling.n_points = n;
    }
    let sc = cfg.build()?;
    let opts = RunOptions {
        stages,
        execution: execution()?,
    };
    let report = scenario::run_scenario(&sc, &opts)?;
    let format = match args.format {
        OutputFormat::Human => Format::Human,
        OutputFormat::Records => Format::Records,
    };
    let mut out: Box<dyn Write> = match &args.out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    report.emit(format, &mut out)?;
    out.flush()?;
    Ok(report.summary.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, stages) = match &cli.command {
        Command::Check(a) => (a, Stages::ALL),
        Command::Nijenhuis(a) => (a, Stages::NIJENHUIS),
        Command::Levi(a) => (a, Stages::LEVI),
        Command::TotalReality(a) => (a, Stages::CONORMAL),
        Command::List => {
            for name in scenario::builtins::names() {
                println!("{name}");
            }
            return ExitCode::SUCCESS;
        }
    };
    match run(args, stages) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 1 })
        }
    }
}

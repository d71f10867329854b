//! `fiid-lab`: seeded experiments on factor-of-iid percolation over random
//! regular graphs, with JSON or CSV reports.

mod commands;
mod report;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fiid_core::{BlockFactor, Projection};

/// Environment variable overriding the number of worker threads.
pub const THREADS_ENV: &str = "FIID_LAB_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid {field}: {source}")]
    Invalid {
        field: &'static str,
        source: fiid_core::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] fiid_core::Error),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid { .. } | CliError::Usage(_) => 2,
            _ => 3,
        }
    }
}

/// Tags the error with the flag it came from.
pub fn field(name: &'static str) -> impl Fn(fiid_core::Error) -> CliError {
    move |source| CliError::Invalid { field: name, source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    /// Plain text; only `gen-graph` and `orient` have it.
    Text,
}

#[derive(Debug, Parser)]
#[command(name = "fiid-lab", version, about = "Factor-of-iid percolation experiments on random regular graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Add wall-clock time to JSON reports (they are then no longer reproducible byte for byte).
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Debug, Args, Clone)]
pub struct GraphArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// A graph given either by `--n/--d/--seed` or by a file.
#[derive(Debug, Args, Clone)]
pub struct GraphSource {
    #[arg(long, required_unless_present = "graph_file")]
    pub n: Option<usize>,
    #[arg(long, required_unless_present = "graph_file")]
    pub d: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Read the graph from a file written by `gen-graph --format text`.
    #[arg(long, conflicts_with_all = ["n", "d"])]
    pub graph_file: Option<PathBuf>,
}

fn parse_factor(s: &str) -> Result<BlockFactor, fiid_core::Error> {
    s.parse()
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a configuration-model multigraph.
    GenGraph(GraphArgs),
    /// Run a factor on fresh graphs and report density, correlation and clusters per trial.
    Simulate {
        #[arg(long, value_parser = parse_factor)]
        factor: BlockFactor,
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value = "strict")]
        mode: Projection,
    },
    /// Edge profile of one run.
    Profile {
        #[arg(long, value_parser = parse_factor)]
        factor: BlockFactor,
        #[command(flatten)]
        graph: GraphSource,
        #[arg(long, default_value = "strict")]
        mode: Projection,
        /// Write profile entries as exact fractions.
        #[arg(long)]
        exact: bool,
    },
    /// Entropy functional over independent trials, checked against a floor.
    EntropyCheck {
        #[arg(long, value_parser = parse_factor)]
        factor: BlockFactor,
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value = "strict")]
        mode: Projection,
        #[arg(long, default_value_t = -0.01, allow_hyphen_values = true)]
        floor: f64,
    },
    /// Closed-form density bound for correlation ratio c, with the quadratic behind it.
    Bound {
        #[arg(long)]
        c: f64,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        /// Defaults to c.
        #[arg(long)]
        rho: Option<f64>,
    },
    /// Interpolation parameters for a target correlation, optionally measured.
    Interpolate {
        #[arg(long)]
        c: f64,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        d: usize,
        /// `nibble` (degree-tuned) or `localmin`.
        #[arg(long, default_value = "nibble")]
        base: String,
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        /// Simulated trials; 0 only prints the parameters.
        #[arg(long, default_value_t = 0)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.1)]
        density_tol: f64,
        #[arg(long, default_value_t = 0.05)]
        corr_tol: f64,
    },
    /// Coupled copies: intersection densities and both stability estimators.
    Couple {
        #[arg(long, value_parser = parse_factor)]
        factor: BlockFactor,
        #[command(flatten)]
        graph: GraphArgs,
        /// Resampling probability.
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 4)]
        k: usize,
        #[arg(long, default_value_t = 8)]
        trials: usize,
        #[arg(long, default_value_t = 64)]
        m: usize,
        #[arg(long, default_value = "strict")]
        mode: Projection,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        moments: Vec<f64>,
        #[arg(long, default_value_t = 3.0)]
        z_max: f64,
        /// Also search for the p giving E*[Q^u] = target.
        #[arg(long)]
        target: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        u: f64,
        #[arg(long, default_value_t = 0.01)]
        tolerance: f64,
    },
    /// Orient a graph with no sources or sinks and certify it.
    Orient {
        #[command(flatten)]
        graph: GraphSource,
        #[arg(long, default_value_t = 1)]
        trials: usize,
        #[arg(long, default_value_t = 0.95)]
        min_peel_rate: f64,
    },
    /// Exact E[Z] against brute force over every pairing (small n d only).
    Oracle {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        d: u64,
        #[arg(long, default_value_t = 2)]
        colours: usize,
    },
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Usage(format!("invalid {THREADS_ENV}: {raw:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("{THREADS_ENV}: {e}")))
}

fn emit(cli: &Cli, report: &report::Report, elapsed_ms: f64) -> Result<(), CliError> {
    let sink: Box<dyn Write> = match &cli.out {
        Some(path) => Box::new(File::create(path)?),
        None => Box::new(io::stdout().lock()),
    };
    let mut sink = BufWriter::new(sink);
    match cli.format {
        Format::Json => {
            let value = report.to_json(cli.timing.then_some(elapsed_ms));
            serde_json::to_writer_pretty(&mut sink, &value)?;
            writeln!(sink)?;
        }
        Format::Csv => report.write_csv(&mut sink)?,
        Format::Text => match &report.text {
            Some(text) => sink.write_all(text.as_bytes())?,
            None => {
                return Err(CliError::Usage(format!(
                    "--format text is not available for {}",
                    report.command
                )))
            }
        },
    }
    sink.flush()?;
    Ok(())
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    configure_threads()?;
    let start = Instant::now();
    let report = commands::run(&cli.command)?;
    emit(cli, &report, start.elapsed().as_secs_f64() * 1e3)?;
    let failures = report.failures();
    for f in &failures {
        eprintln!("check failed: {}: {}", f.name, f.detail);
    }
    Ok(failures.is_empty())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

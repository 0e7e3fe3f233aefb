//! Experiment harness for the output-purity toolkit.
//!
//! Exit codes keep three meanings apart: 0 = clean run, every checked
//! inequality held; 2 = a mathematical violation was witnessed (a check
//! failed, a search found a counterexample, a decomposition failed to
//! verify); 1 = operational error (bad flags, unreadable files, unsupported
//! inputs). Usage errors never masquerade as violations.

mod commands;
mod inputs;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "moplab",
    version,
    about = "Schatten norms, maximal output purity, inequality checks and seeded sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Schatten q-norm of a matrix document.
    Norm(NormArgs),
    /// Maximal output purity nu_q (or minimal output entropy) of a channel.
    Mop(MopArgs),
    /// Run one named inequality check on inputs from a document.
    Check(CheckArgs),
    /// Threshold exponents and violation window of the diagonal family.
    Counterexample(CounterexampleArgs),
    /// Seeded cross-product of (check, q, seed) cells, emitted as a table.
    Sweep(SweepArgs),
    /// Randomized falsification search; violations are written as witness
    /// bundles that `check` can replay.
    Search(SearchArgs),
    /// Decompose a positive block-Toeplitz operator into phased terms.
    Decompose(DecomposeArgs),
    /// Complementary channel of a completely positive map.
    Complement(ComplementArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Csv,
    StructuredText,
}

#[derive(Args)]
struct NormArgs {
    /// Matrix document to read.
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Norm order: a number >= 1/2, or "inf".
    #[arg(long, default_value = "2")]
    q: String,
}

#[derive(Args)]
struct MopArgs {
    /// Channel document to read.
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Norm order: a number >= 1/2, or "inf".
    #[arg(long, default_value = "2")]
    q: String,
    /// Compute the minimal output entropy instead of nu_q.
    #[arg(long)]
    entropy: bool,
    /// Second channel document: compute nu_q of the tensor product.
    #[arg(long, value_name = "FILE")]
    with: Option<PathBuf>,
    /// Bloch grid for qubit inputs, as "rows,cols".
    #[arg(long)]
    grid: Option<String>,
    /// Ascent restarts for inputs beyond qubits.
    #[arg(long)]
    restarts: Option<usize>,
    /// Optimizer convergence tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Largest accepted input dimension for tensor-product optimization.
    #[arg(long)]
    max_dim: Option<usize>,
    /// Seed for the optimizer's restart streams.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct CheckArgs {
    /// Which check to run; may be omitted when the input document names it.
    name: Option<String>,
    /// Check-input document, or a report document whose witness is replayed.
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Norm order; overrides the value recorded in the document.
    #[arg(long)]
    q: Option<String>,
    /// Pass tolerance; holds means gap >= -tol * (1 + |rhs|).
    #[arg(long)]
    tol: Option<f64>,
    /// Bloch grid for checks that need the purity optimizer.
    #[arg(long)]
    grid: Option<String>,
    /// Ascent restarts for checks that need the purity optimizer.
    #[arg(long)]
    restarts: Option<usize>,
    /// Seed for the purity optimizer.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the full report document here.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "structured-text")]
    format: OutputFormat,
}

#[derive(Args)]
struct CounterexampleArgs {
    /// Family parameters, comma separated; each must lie in (0, 1).
    #[arg(long, default_value = "", value_name = "LIST")]
    b: String,
    /// Norm orders 2q to probe, comma separated. Default per b:
    /// 2.05, the window midpoint, and the threshold plus one.
    #[arg(long, value_name = "LIST")]
    q: Option<String>,
    /// Pass tolerance for the individual checks.
    #[arg(long)]
    tol: Option<f64>,
    /// Write the table here instead of stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: OutputFormat,
}

#[derive(Args)]
struct SweepArgs {
    /// Check names, comma separated.
    #[arg(long, value_name = "LIST")]
    check: String,
    /// Norm orders, comma separated.
    #[arg(long, default_value = "2", value_name = "LIST")]
    q: String,
    /// First seed of the sweep.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of seeds per (check, q) pair.
    #[arg(long, default_value_t = 1)]
    samples: usize,
    /// Pass tolerance for the individual checks.
    #[arg(long)]
    tol: Option<f64>,
    /// Write the table here instead of stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: OutputFormat,
}

#[derive(Args)]
struct SearchArgs {
    /// Search target: "phase-envelope" (random maps and states) or
    /// "sqrt-factor" (random factor quadruples).
    #[arg(long, default_value = "phase-envelope")]
    check: String,
    /// Random instances to draw.
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// First seed of the sample stream.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Norm orders to probe per instance, comma separated.
    #[arg(long, default_value = "1.5", value_name = "LIST")]
    q: String,
    /// Sample only certified entanglement-breaking channels.
    #[arg(long)]
    eb_only: bool,
    /// Include the diagonal family (at the `--b` parameters) among the
    /// sqrt-factor candidates.
    #[arg(long)]
    include_family: bool,
    /// Family parameters for --include-family, comma separated.
    #[arg(long, default_value = "0.5", value_name = "LIST")]
    b: String,
    /// Pass tolerance for the individual checks.
    #[arg(long)]
    tol: Option<f64>,
    /// Directory that receives witness bundles.
    #[arg(long, default_value = ".", value_name = "DIR")]
    out: PathBuf,
}

#[derive(Args)]
struct DecomposeArgs {
    /// Block-Toeplitz input document (diagonal and off-diagonal blocks).
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Write the decomposition document here.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "structured-text")]
    format: OutputFormat,
}

#[derive(Args)]
struct ComplementArgs {
    /// Channel document to read (must be completely positive).
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Write the complementary channel document here (default: stdout).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("MOPLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| format!("MOPLAB_THREADS must be a positive integer, got `{raw}`"))?;
    if n == 0 {
        return Err("MOPLAB_THREADS must be a positive integer, got `0`".into());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| format!("cannot configure the thread pool: {e}"))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("moplab: {msg}");
        return ExitCode::from(1);
    }
    match commands::dispatch(cli.command) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(2),
        Err(err) => {
            eprintln!("moplab: {err}");
            ExitCode::from(1)
        }
    }
}

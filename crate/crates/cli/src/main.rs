//! `gbm`: command-line driver for the gbm-core laboratory.

mod commands;
mod output;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gbm_core::GbmError;
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  1  a theorem-backed check returned a `violated` verdict (check)
  2  usage or configuration error (bad flags, missing seed for a Monte Carlo run)
  3  unreadable or unwritable file
  4  schema violation in a body or corpus document
  5  dimension mismatch
  6  invalid parameter, degenerate body or unsupported operation
  7  numerical failure (too few Monte Carlo hits, no convergence)

Every flag can also be set through an environment variable named GBM_<FLAG>,
for example GBM_SEED=7 or GBM_WORKERS=4.";

#[derive(Parser, Debug)]
#[command(name = "gbm", version, about = "Gaussian Brunn-Minkowski numerical laboratory", after_help = EXIT_CODES)]
struct Cli {
    /// Worker threads for parallel sampling and corpus runs; results do not depend on it.
    #[arg(long, global = true, env = "GBM_WORKERS")]
    workers: Option<usize>,

    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json, env = "GBM_FORMAT")]
    format: Format,

    /// Output path; standard output when absent.
    #[arg(long, global = true, env = "GBM_OUT")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Gaussian measure (and optionally second moment) of a body.
    Measure(MeasureArgs),
    /// Tabulate the sigma refinement function and its convexity certificate.
    Sigma(SigmaArgs),
    /// Solve Lu = 1 on a planar body and report the Hessian/gradient functional.
    Pde(PdeArgs),
    /// Truncated-slab experiment over a set of widths and resolutions.
    Slab(SlabArgs),
    /// Run every check of a corpus; writes JSON lines and an optional CSV summary.
    Check(CheckArgs),
    /// Generate a seeded corpus of check cases.
    Corpus(CorpusArgs),
}

/// Accepts integers and float spellings such as `1e6`.
fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let f: f64 = s.parse().map_err(|_| format!("'{s}' is not a count"))?;
    if f >= 1.0 && f.fract() == 0.0 && f <= 1e15 {
        Ok(f as u64)
    } else {
        Err(format!("'{s}' is not a positive whole number"))
    }
}

#[derive(Args, Debug)]
pub struct Sampling {
    /// Monte Carlo sample count (`1e6` style accepted).
    #[arg(long, value_parser = parse_count, default_value = "1000000", env = "GBM_SAMPLES")]
    pub samples: u64,

    /// Seed for Monte Carlo; required whenever sampling is needed.
    #[arg(long, env = "GBM_SEED")]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct MeasureArgs {
    /// Body description (JSON).
    #[arg(long, env = "GBM_BODY")]
    pub body: PathBuf,

    /// Require a closed form or quadrature; fail instead of sampling.
    #[arg(long)]
    pub exact: bool,

    /// Also report the second moment ∫_K |x|² dγ.
    #[arg(long)]
    pub second_moment: bool,

    #[command(flatten)]
    pub sampling: Sampling,
}

#[derive(Args, Debug)]
pub struct SigmaArgs {
    /// Dimension.
    #[arg(long, env = "GBM_N")]
    pub n: usize,

    /// Table nodes.
    #[arg(long, value_parser = parse_count, default_value = "4096", env = "GBM_NODES")]
    pub nodes: u64,

    /// Largest tabulated radius.
    #[arg(long, default_value_t = gbm_core::sigma::DEFAULT_R_MAX, env = "GBM_R_MAX")]
    pub r_max: f64,
}

#[derive(Args, Debug)]
pub struct PdeArgs {
    /// Planar body description (JSON).
    #[arg(long, env = "GBM_BODY")]
    pub body: PathBuf,

    /// Even Dirichlet data: zero, cos[:freq] or quadratic[:a,b,c].
    #[arg(long, default_value = "zero", env = "GBM_BC")]
    pub bc: String,

    /// Finest grid spacing.
    #[arg(long, env = "GBM_H")]
    pub h: f64,

    /// Refinement levels ending at h (spacings 2^(k-1) h, ..., 2h, h).
    #[arg(long, default_value_t = 3, env = "GBM_LEVELS")]
    pub levels: usize,

    /// Report path; same as --out.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SlabArgs {
    /// Dimension (only 2 is implemented).
    #[arg(long, default_value_t = 2, env = "GBM_N")]
    pub n: usize,

    /// Slab half-widths, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.2", env = "GBM_EPS")]
    pub eps: Vec<f64>,

    /// Nodes across the slab, one resolution per entry.
    #[arg(long, value_delimiter = ',', value_parser = parse_count, default_value = "17,33", env = "GBM_NODES")]
    pub nodes: Vec<u64>,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    /// Corpus file: a JSON array of check cases.
    #[arg(long, env = "GBM_CORPUS")]
    pub corpus: PathBuf,

    /// Override every case's sample count.
    #[arg(long, value_parser = parse_count, env = "GBM_SAMPLES")]
    pub samples: Option<u64>,

    /// CSV summary path (name, check, lhs, rhs, margin, sigmas, verdict).
    #[arg(long, env = "GBM_SUMMARY")]
    pub summary: Option<PathBuf>,

    /// JSON report with verdict counts.
    #[arg(long)]
    pub report: Option<PathBuf>,

    /// Skip the single-body lemma checks.
    #[arg(long)]
    pub no_lemmas: bool,

    /// Odd cubics per body for the Brascamp-Lieb check.
    #[arg(long, default_value_t = 3)]
    pub bl_functions: usize,
}

#[derive(Args, Debug)]
pub struct CorpusArgs {
    /// Generation seed.
    #[arg(long, default_value_t = gbm_core::checks::DEFAULT_CORPUS_SEED, env = "GBM_SEED")]
    pub seed: u64,

    /// Number of cases.
    #[arg(long, value_parser = parse_count, default_value = "216", env = "GBM_COUNT")]
    pub count: u64,

    /// Samples recorded in every case.
    #[arg(long, value_parser = parse_count, default_value = "1000000", env = "GBM_SAMPLES")]
    pub samples: u64,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }

    pub fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        Failure { code: 3, message: format!("{}: {e}", path.display()) }
    }
}

impl From<GbmError> for Failure {
    fn from(e: GbmError) -> Self {
        let code = match e {
            GbmError::Io(_) => 3,
            GbmError::Schema(_) => 4,
            GbmError::DimensionMismatch { .. } => 5,
            GbmError::InvalidParameter(_) | GbmError::Degenerate(_) | GbmError::Unsupported(_) => 6,
            GbmError::InsufficientHits { .. } | GbmError::Convergence(_) | GbmError::Integration(_) => 7,
        };
        Failure { code, message: e.to_string() }
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(Failure::usage("--workers must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| Failure::usage(format!("cannot start {w} workers: {e}")))?;
    }
    let out = output::Sink::new(cli.out, cli.format);
    match cli.command {
        Command::Measure(a) => commands::measure(&a, &out),
        Command::Sigma(a) => commands::sigma(&a, &out),
        Command::Pde(a) => {
            let out = match &a.report {
                Some(p) => output::Sink::new(Some(p.clone()), out.format),
                None => out,
            };
            commands::pde(&a, &out)
        }
        Command::Slab(a) => commands::slab(&a, &out),
        Command::Check(a) => commands::check(&a, &out),
        Command::Corpus(a) => commands::corpus(&a, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

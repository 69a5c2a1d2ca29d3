// `!(x > 0.0)` style checks are there to reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use cardiomix_core::fusion::{Criterion, DEFAULT_TAU, DEFAULT_W_MAX, DEFAULT_W_MIN};
use cardiomix_core::batch::FuseMode;
use cardiomix_core::metrics::DEFAULT_MATCH_TOL_MS;
use cardiomix_core::preprocess::{DEFAULT_HI_HZ, DEFAULT_LO_HZ, DEFAULT_RATE, DEFAULT_SECONDS};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// ECG delineation data tools: preprocessing, pattern-guided CutMix,
/// consistency checks and metrics.
#[derive(Debug, Parser)]
#[command(name = "cardiomix", version)]
struct Cli {
    /// Worker threads (0 = one per core). Outputs do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fix duration, resample, band-pass and z-score every record.
    Preprocess(PreprocessArgs),
    /// Run CutMix fusion over mini-batches of a dataset.
    Fuse(FuseArgs),
    /// Count T waves without a preceding QRS, per record.
    Consistency(ConsistencyArgs),
    /// Segmentation mIoU and PR/QRS/QT interval errors.
    Evaluate(EvaluateArgs),
    /// Generate a synthetic labeled dataset.
    Synth(SynthArgs),
    /// Attach simulated teacher probabilities derived from the labels.
    Corrupt(CorruptArgs),
    /// Check the fast search and similarity code against brute force.
    OracleCheck(OracleArgs),
}

#[derive(Debug, Args)]
struct PreprocessArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Target sample rate (Hz).
    #[arg(long, default_value_t = DEFAULT_RATE)]
    rate: u32,
    /// Band-pass low corner (Hz).
    #[arg(long, default_value_t = DEFAULT_LO_HZ)]
    lo: f64,
    /// Band-pass high corner (Hz).
    #[arg(long, default_value_t = DEFAULT_HI_HZ)]
    hi: f64,
    /// Output duration; longer records are cropped, shorter ones padded.
    #[arg(long, default_value_t = DEFAULT_SECONDS)]
    seconds: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Cardiomix,
    L2u,
    U2l,
    Vanilla,
}

impl From<ModeArg> for FuseMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Cardiomix => FuseMode::Cardiomix,
            ModeArg::L2u => FuseMode::L2u,
            ModeArg::U2l => FuseMode::U2l,
            ModeArg::Vanilla => FuseMode::Vanilla,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CriterionArg {
    Pattern,
    Signal,
    Random,
}

impl From<CriterionArg> for Criterion {
    fn from(c: CriterionArg) -> Self {
        match c {
            CriterionArg::Pattern => Criterion::Pattern,
            CriterionArg::Signal => Criterion::Signal,
            CriterionArg::Random => Criterion::Random,
        }
    }
}

#[derive(Debug, Args)]
struct FuseArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Cardiomix)]
    mode: ModeArg,
    /// Key selection criterion.
    #[arg(long, value_enum, default_value_t = CriterionArg::Pattern)]
    criterion: CriterionArg,
    /// Confidence gate for unlabeled-to-labeled fusion; fuse only when
    /// confidence > tau.
    #[arg(long, default_value_t = DEFAULT_TAU)]
    tau: f64,
    /// Smallest window width (samples).
    #[arg(long, default_value_t = DEFAULT_W_MIN)]
    wmin: usize,
    /// Largest window width (samples).
    #[arg(long, default_value_t = DEFAULT_W_MAX)]
    wmax: usize,
    /// Samples per side in each mini-batch.
    #[arg(long, default_value_t = 16)]
    batch: usize,
    /// Number of mini-batches.
    #[arg(long, default_value_t = 1)]
    steps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Average IoU over all classes, scoring classes absent from both
    /// segments as 1, instead of over present classes only.
    #[arg(long)]
    literal_sim: bool,
}

#[derive(Debug, Args)]
struct ConsistencyArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Also flag a T wave that opens the record.
    #[arg(long)]
    no_start_exemption: bool,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    pred_manifest: PathBuf,
    #[arg(long)]
    gt_manifest: PathBuf,
    /// Largest QRS-onset distance for matching beats (ms).
    #[arg(long, default_value_t = DEFAULT_MATCH_TOL_MS)]
    match_tol_ms: f64,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    /// Number of records.
    #[arg(long, default_value_t = 64)]
    n: usize,
    /// Heart rate (bpm); with --max-bpm, the low end of a uniform range.
    #[arg(long, default_value_t = 60.0)]
    bpm: f64,
    #[arg(long)]
    max_bpm: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_SECONDS)]
    seconds: f64,
    #[arg(long, default_value_t = DEFAULT_RATE)]
    rate: u32,
    /// White noise standard deviation (QRS amplitude is 1).
    #[arg(long, default_value_t = 0.02)]
    noise: f64,
    /// Fraction of records marked labeled; the rest are unlabeled.
    #[arg(long, default_value_t = 0.5)]
    labeled_ratio: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct CorruptArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Largest boundary shift (samples).
    #[arg(long, default_value_t = 0)]
    jitter: usize,
    /// Per-sample probability of a class flip.
    #[arg(long, default_value_t = 0.0)]
    flip: f64,
    /// Probability given to the chosen class.
    #[arg(long, default_value_t = 1.0)]
    sharpness: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
}

/// Failure classes, each with its own exit status.
#[derive(Debug)]
enum Failure {
    Argument(String),
    Data(String),
    Mismatch(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Argument(_) => 2,
            Failure::Data(_) => 3,
            Failure::Mismatch(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Argument(m) | Failure::Data(m) | Failure::Mismatch(m) => m,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    };
    let result = pool.install(|| match cli.command {
        Command::Preprocess(a) => commands::preprocess(a),
        Command::Fuse(a) => commands::fuse(a),
        Command::Consistency(a) => commands::consistency(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Synth(a) => commands::synth(a),
        Command::Corrupt(a) => commands::corrupt(a),
        Command::OracleCheck(a) => commands::oracle_check(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let msg = f.message().replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::from(f.code())
        }
    }
}

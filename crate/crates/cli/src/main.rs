use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod config;

#[derive(Parser, Debug)]
#[command(
    name = "driftex",
    version,
    about = "Explain concept drift with characteristic samples and their counterparts",
    args_override_self = true
)]
pub struct Cli {
    /// Flat `key = value` file of long flag names; command-line flags win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a synthetic dataset and its ground truth as CSV.
    #[command(subcommand)]
    Generate(GenerateCommand),
    /// Explain the drift events in a stream.
    Explain(ExplainArgs),
    /// Run a repeated-run evaluation.
    #[command(subcommand)]
    Eval(EvalCommand),
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// Output directory.
    #[arg(long, env = "DRIFTEX_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum GenerateCommand {
    /// Gaussian mixture with class-dependent occurrence probabilities.
    Gmm(GmmArgs),
    /// Checkerboard of uniformly filled cells, one active set per bin.
    Checkerboard(CheckerboardArgs),
}

#[derive(Args, Debug)]
pub struct GmmArgs {
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long, default_value_t = 2)]
    pub n_class: usize,
    #[arg(long, default_value_t = 2)]
    pub n_gauss: usize,
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    /// Half-width of the box the component means are drawn from.
    #[arg(long, default_value_t = 10.0)]
    pub a: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// File stem for the dataset and ground-truth files.
    #[arg(long, default_value = "gmm")]
    pub name: String,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct CheckerboardArgs {
    #[arg(long, default_value_t = 150)]
    pub n_per_bin: usize,
    #[arg(long, default_value_t = 3)]
    pub grid: usize,
    #[arg(long, default_value_t = 2)]
    pub bins: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "checkerboard")]
    pub name: String,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorKind {
    Oracle,
    Window,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassifierKind {
    Knn,
    Rf,
}

#[derive(Args, Debug, Clone)]
pub struct ClassifierArgs {
    #[arg(long, value_enum, default_value = "knn")]
    pub classifier: ClassifierKind,
    /// Neighbours for k-NN.
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Trees for the random forest.
    #[arg(long, default_value_t = 10)]
    pub trees: usize,
}

#[derive(Args, Debug)]
pub struct ExplainArgs {
    /// CSV (header row, optional `t` column) or `.ndjson`/`.jsonl` stream.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "oracle")]
    pub detector: DetectorKind,
    /// Zero-based positions where the oracle detector fires.
    #[arg(long, value_delimiter = ',')]
    pub change_at: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub window: usize,
    #[arg(long, default_value_t = 4.0)]
    pub threshold: f64,
    #[command(flatten)]
    pub classifier: ClassifierArgs,
    /// kmeans-resampled, kmeans-weighted, kmeans-baseline, mean-shift or
    /// affinity-propagation.
    #[arg(long, default_value = "kmeans-resampled")]
    pub method: String,
    #[arg(long, default_value_t = 3)]
    pub prototypes: usize,
    #[arg(long)]
    pub m_draw: Option<usize>,
    /// `euclidean`, `pnorm:P` or `mahalanobis:FILE` (CSV matrix, no header).
    #[arg(long, default_value = "euclidean")]
    pub dissimilarity: String,
    #[arg(long)]
    pub standardize: bool,
    /// Keep at most this many samples per bin (reservoir sampling).
    #[arg(long)]
    pub bin_capacity: Option<usize>,
    /// Input columns to drop, e.g. a class label.
    #[arg(long, value_delimiter = ',')]
    pub ignore_columns: Vec<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Subcommand, Debug)]
pub enum EvalCommand {
    /// MSE of estimated against analytic identifiability on mixtures.
    Identifiability(GridArgs),
    /// Analytic identifiability at characteristic samples on mixtures.
    Prototypes(GridArgs),
    /// Cell misclassification on random checkerboards.
    Checkerboard(CheckerboardEvalArgs),
    /// MSE of estimated identifiability on a relabelled CSV dataset.
    Benchmark(BenchmarkArgs),
}

#[derive(Args, Debug)]
pub struct GridArgs {
    /// Mixture shapes `d/n_gauss_per_class/n_class`.
    #[arg(long, value_delimiter = ',', default_value = "2/2/2,100/8/2,2/2/10")]
    pub configs: Vec<String>,
    /// Classifiers for identifiability runs (`knn`, `rf`).
    #[arg(long, value_delimiter = ',', default_value = "knn")]
    pub models: Vec<String>,
    /// Clustering methods for prototype runs.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "kmeans-resampled,kmeans-weighted,kmeans-baseline,mean-shift,affinity-propagation"
    )]
    pub methods: Vec<String>,
    #[arg(long, default_value_t = 30)]
    pub runs: usize,
    #[arg(long, default_value_t = 500)]
    pub n_train: usize,
    #[arg(long, default_value_t = 1500)]
    pub n_eval: usize,
    #[arg(long, default_value_t = 8)]
    pub prototypes: usize,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, default_value_t = 10)]
    pub trees: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    Presence,
    Mass,
}

#[derive(Args, Debug)]
pub struct CheckerboardEvalArgs {
    #[arg(long, default_value_t = 30)]
    pub runs: usize,
    #[arg(long, default_value_t = 150)]
    pub n_per_bin: usize,
    #[arg(long, default_value_t = 3)]
    pub grid: usize,
    #[command(flatten)]
    pub classifier: ClassifierArgs,
    #[arg(long, default_value = "kmeans-resampled")]
    pub method: String,
    #[arg(long, default_value_t = 3)]
    pub prototypes: usize,
    /// Flag a cell when a characteristic sample lies in it (`presence`) or
    /// when its mean estimated identifiability exceeds one half (`mass`).
    #[arg(long, value_enum, default_value = "presence")]
    pub rule: RuleKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    Regression,
    Classification,
}

#[derive(Args, Debug)]
pub struct BenchmarkArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Name of the target column.
    #[arg(long)]
    pub target: String,
    #[arg(long, value_enum)]
    pub task: TaskKind,
    #[arg(long, value_delimiter = ',', default_value = "knn")]
    pub models: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub ignore_columns: Vec<String>,
    #[arg(long, default_value_t = 30)]
    pub runs: usize,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, default_value_t = 10)]
    pub trees: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

fn main() -> ExitCode {
    let args = match config::merge_config(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::parse_from(args);
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .init();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

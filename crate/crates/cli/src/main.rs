//! tsmt: run two-stage testing procedures on CSV data, compute detection
//! thresholds, execute simulation presets, and emit plot-ready CSV.

mod out;
mod plot;
mod runcmd;
mod simulate;
mod thresholds;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tsmt_core::Error;

#[derive(Parser)]
#[command(
    name = "tsmt",
    version,
    about = "Two-stage multiple hypothesis testing: procedures, detection thresholds, and simulation grids"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Apply a testing procedure to a CSV dataset and write per-hypothesis decisions
    Run(RunArgs),
    /// Compute asymptotic mu^2 detection thresholds (optionally tuning gamma)
    Thresholds(ThresholdsArgs),
    /// Run a simulation preset or an explicit scenario and write metric estimates
    Simulate(SimulateArgs),
    /// Reshape a results CSV into long-format plot data keyed (figure, panel, x, series)
    PlotData(PlotDataArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    TsBonf,
    TsHolm,
    Bonferroni,
    Holm,
    Hochberg,
    Bh,
    Simes,
    Hc,
    SsBonf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SigmaArg {
    Known,
    Estimated,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    Mean,
    Median,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MeansArg {
    /// Signal means all equal to --mean-value
    Constant,
    /// Signal means drawn from U(-1, 1) each replication
    Uniform,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DependenceArg {
    Independent,
    /// Equal correlation --rho across all coordinates
    Equal,
    /// Correlation --rho within blocks of --block-size
    Block,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VarianceArg {
    Unit,
    /// One sigma^2 ~ U(--var-lo, --var-hi) shared per replication
    Common,
    /// Independent sigma_i^2 ~ U(--var-lo, --var-hi)
    PerHypothesis,
}

#[derive(Args)]
pub struct RunArgs {
    /// Input dataset: m rows x n numeric columns, comma separated, no header
    #[arg(long)]
    data: PathBuf,
    /// Skip one header row
    #[arg(long)]
    header: bool,
    #[arg(long, value_enum)]
    method: MethodArg,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Selection exponent in (0, 1] (two-stage and split methods)
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    /// Variance handling for the two-stage selection threshold
    #[arg(long, value_enum, default_value_t = SigmaArg::Known)]
    sigma: SigmaArg,
    /// Pooling of the m per-sample variances when --sigma estimated
    #[arg(long, value_enum, default_value_t = EstimatorArg::Mean)]
    sigma_estimator: EstimatorArg,
    /// Split fraction r in (0, 1) for ss-bonf (n1 = floor(r n))
    #[arg(long, default_value_t = 0.5)]
    split_r: f64,
    /// Constant selection level for ss-bonf instead of the gamma-based cutoff
    #[arg(long)]
    split_level: Option<f64>,
    /// Seed for the Higher Criticism calibration streams
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct ThresholdsArgs {
    /// Single d = log(m)/n value; omitting it emits the full tuning grid
    /// d in {0.05, 0.10, ..., 1.00}
    #[arg(long)]
    d: Option<f64>,
    /// Fixed selection exponent for the two-stage threshold
    #[arg(long)]
    gamma: Option<f64>,
    /// Minimize the two-stage threshold over gamma and report gamma*
    #[arg(long)]
    optimize: bool,
    /// Also emit the split-sample threshold for this split fraction
    #[arg(long)]
    split_r: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Named grid: fig4_1, fig8_1, fig8_2, fig8_3, or fig8_4
    #[arg(long, conflicts_with = "m")]
    preset: Option<String>,
    /// Replications per cell
    #[arg(long, default_value_t = 2000)]
    reps: usize,
    /// Base seed; cells derive their own streams from it
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Override the preset's signal-mean mode (fig8_3/fig8_4)
    #[arg(long, value_enum)]
    means: Option<MeansArg>,
    /// Mean of every signal row when --means constant
    #[arg(long, default_value_t = 1.0)]
    mean_value: f64,

    // explicit-scenario fields (used when --preset is absent)
    /// Number of hypotheses
    #[arg(long)]
    m: Option<usize>,
    /// Observations per hypothesis
    #[arg(long, default_value_t = 15)]
    n: usize,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    #[arg(long, value_enum, default_value_t = SigmaArg::Known)]
    sigma: SigmaArg,
    #[arg(long, value_enum, default_value_t = EstimatorArg::Mean)]
    sigma_estimator: EstimatorArg,
    #[arg(long, default_value_t = 0.5)]
    split_r: f64,
    #[arg(long)]
    split_level: Option<f64>,
    #[arg(long, value_enum, default_value_t = DependenceArg::Independent)]
    dependence: DependenceArg,
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
    #[arg(long, default_value_t = 10)]
    block_size: usize,
    #[arg(long, value_enum, default_value_t = VarianceArg::Unit)]
    variance: VarianceArg,
    #[arg(long, default_value_t = 0.5)]
    var_lo: f64,
    #[arg(long, default_value_t = 1.5)]
    var_hi: f64,
    /// Number of false nulls (rows with nonzero means)
    #[arg(long, default_value_t = 0)]
    signal_count: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct PlotDataArgs {
    /// A results CSV produced by `simulate` or `thresholds`
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Domain(_) | Error::Config(_) => 2,
        Error::Data { .. } | Error::Io(_) => 1,
    }
}

fn main() {
    // TSMT_THREADS caps the worker count; output never depends on it.
    if let Ok(raw) = std::env::var("TSMT_THREADS") {
        if let Ok(k) = raw.trim().parse::<usize>() {
            if k >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(k)
                    .build_global();
            }
        }
    }

    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => runcmd::run(&args),
        Command::Thresholds(args) => thresholds::run(&args),
        Command::Simulate(args) => simulate::run(&args),
        Command::PlotData(args) => plot::run(&args),
    };
    if let Err(err) = result {
        eprintln!("error: {err}");
        std::process::exit(exit_code_for(&err));
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

use commands::CliError;

#[derive(Parser, Debug)]
#[command(name = "tnperm", version, about = "Recover the hidden core order of tensor-ring and tensor-train data")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Recover the loop order of a saved ring stack.
    RecoverRing(RecoverArgs),
    /// Recover the path order of a saved train stack.
    RecoverTrain(RecoverArgs),
    /// Decide the cyclic order of four axes.
    Order4(OrderArgs),
    /// Decide the linear order of three axes.
    Order3(OrderArgs),
    /// Monte Carlo success-rate sweep over a noise grid.
    Experiment(ExperimentArgs),
    /// Sweep on Potts free-energy tensors.
    Potts(ExperimentArgs),
    /// Sweep comparing the query-based method with a full-tensor greedy search.
    BaselineCompare(ExperimentArgs),
    /// Report whether the rank parameter suits the given dimensions.
    CheckAssumptions(CheckArgs),
    /// Draw a random stack and save it as JSON.
    SampleCores(SampleArgs),
}

#[derive(Args, Debug)]
pub struct RecoverArgs {
    /// Stack JSON as written by `sample-cores`.
    #[arg(long)]
    pub cores: PathBuf,
    #[arg(long = "R", default_value_t = 2)]
    pub rank: usize,
    #[arg(long, default_value_t = 1)]
    pub voters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Standard deviation of observation noise added to every query.
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    /// singular_value or exact_rank.
    #[arg(long)]
    pub rank_mode: Option<String>,
    /// Write the result here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct OrderArgs {
    #[arg(long)]
    pub cores: PathBuf,
    /// 1-based axes, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub probes: Vec<usize>,
    #[arg(long = "R", default_value_t = 2)]
    pub rank: usize,
    #[arg(long, default_value_t = 1)]
    pub voters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    #[arg(long)]
    pub rank_mode: Option<String>,
}

/// Every flag overrides the key of the same name in `--config`, which in
/// turn overrides the desk defaults for the mode.
#[derive(Args, Debug)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// ring, train, potts or baseline_compare.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub d: Option<usize>,
    /// One size for every axis, or a comma list with one per axis.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long = "R")]
    pub rank: Option<usize>,
    #[arg(long)]
    pub voters: Option<usize>,
    /// Noise grid, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub sigma: Option<Vec<f64>>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, conflicts_with = "entropy")]
    pub seed: Option<u64>,
    /// Pick a fresh master seed; it is recorded in config.json.
    #[arg(long)]
    pub entropy: bool,
    #[arg(long)]
    pub profile: Option<String>,
    #[arg(long)]
    pub rank_mode: Option<String>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// noise_floor or frobenius_tail:<eps>.
    #[arg(long)]
    pub baseline_tol: Option<String>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Keep grid points already written to `--out` by an identical config.
    #[arg(long)]
    pub resume: bool,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    #[arg(long)]
    pub r: usize,
    #[arg(long = "R")]
    pub rank: usize,
    #[arg(long)]
    pub mode: String,
    /// 1-based chain order, comma separated; locates the train endpoints.
    #[arg(long, value_delimiter = ',')]
    pub perm: Option<Vec<usize>>,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    #[arg(long)]
    pub r: usize,
    #[arg(long)]
    pub mode: String,
    #[arg(long, default_value = "full_rank")]
    pub profile: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// 1-based chain order; drawn from the seed when absent.
    #[arg(long, value_delimiter = ',')]
    pub perm: Option<Vec<usize>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::RecoverRing(a) => commands::recover(a, tnperm::tensor_core::Mode::Ring),
        Cmd::RecoverTrain(a) => commands::recover(a, tnperm::tensor_core::Mode::Train),
        Cmd::Order4(a) => commands::order(a, 4),
        Cmd::Order3(a) => commands::order(a, 3),
        Cmd::Experiment(a) => commands::experiment(a, None),
        Cmd::Potts(a) => commands::experiment(a, Some("potts")),
        Cmd::BaselineCompare(a) => commands::experiment(a, Some("baseline_compare")),
        Cmd::CheckAssumptions(a) => commands::check(a),
        Cmd::SampleCores(a) => commands::sample(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Run(e) if e.is_undecidable() => 3,
            CliError::Run(_) => 1,
        }
    }
}

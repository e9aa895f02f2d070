use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use slap_mcts::Mode;

mod bench;
mod config;
mod eval;
mod play;
mod synth;
mod train;

use config::RunConfig;

/// An error in how the program was invoked; exits with status 1.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

#[derive(Parser)]
#[command(name = "slap", version, about = "Symmetry-canonicalized AlphaZero-style Gomoku")]
struct Cli {
    /// TOML run configuration; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Parallel evaluation games.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Self-play policy iteration.
    Train(TrainArgs),
    /// Synthetic about-to-win experiments.
    #[command(subcommand)]
    Synth(SynthCommand),
    /// A checkpoint against pure MCTS at several playout counts.
    Eval(EvalArgs),
    /// Play a checkpoint in the terminal.
    Play(PlayArgs),
    /// Canonicalization against eightfold augmentation on random states.
    CanonBench(BenchArgs),
}

#[derive(Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub games: Option<u64>,
    /// Playouts per self-play move.
    #[arg(long)]
    pub playouts: Option<usize>,
    /// Continue from a checkpoint of an earlier run.
    #[arg(long)]
    pub resume: Option<PathBuf>,
}

#[derive(Subcommand)]
pub enum SynthCommand {
    /// Generate the dataset and write it to `<out>/dataset`.
    Build {
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long)]
        split_seed: Option<u64>,
    },
    /// One supervised run; writes its convergence record.
    Train(SynthTrainArgs),
    /// Every combination of a grid spec.
    Grid {
        /// TOML or JSON grid spec.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        iterations: Option<u64>,
    },
}

#[derive(Args)]
pub struct SynthTrainArgs {
    #[arg(long, alias = "use_slap", num_args = 0..=1, default_missing_value = "true")]
    pub use_slap: Option<bool>,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub iterations: Option<u64>,
    #[arg(long)]
    pub train_size: Option<usize>,
    #[arg(long)]
    pub stop_below: Option<f64>,
}

#[derive(Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub mode: Option<Mode>,
    /// Opponent playout counts, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub tiers: Option<Vec<usize>>,
    #[arg(long)]
    pub games_per_tier: Option<usize>,
    /// Playouts of the checkpoint's agent.
    #[arg(long)]
    pub playouts: Option<usize>,
}

#[derive(Args)]
pub struct PlayArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, default_value = "black")]
    pub human_color: String,
    #[arg(long)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub playouts: Option<usize>,
    /// Start from a board diagram instead of the empty board.
    #[arg(long)]
    pub start: Option<PathBuf>,
}

#[derive(Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 10_000)]
    pub n_states: usize,
}

fn load_config(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(workers) = cli.workers {
        cfg.workers = workers;
    }
    if cfg.workers == 0 {
        return Err(Usage("workers must be at least 1".into()).into());
    }
    Ok(cfg)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = load_config(&cli)?;
    match cli.command {
        Command::Train(args) => train::run(cfg, args),
        Command::Synth(cmd) => synth::run(cfg, cmd),
        Command::Eval(args) => eval::run(cfg, args),
        Command::Play(args) => play::run(cfg, args),
        Command::CanonBench(args) => bench::run(cfg, args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<Usage>().is_some() => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

mod commands;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use settings::CliError;

#[derive(Parser)]
#[command(name = "increg", version, about = "Incremental multi-view registration from pairwise pointmap prediction")]
struct Cli {
    /// JSON file mirroring the flags; flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic scene and write its ground-truth bundle.
    Simulate(SimulateFlags),
    /// Register every view of a scene bundle.
    Reconstruct(ReconstructFlags),
    /// Merge several reconstructions into one pose set.
    Ensemble(EnsembleFlags),
    /// Score predicted poses against ground truth.
    Evaluate(EvaluateFlags),
    /// Build the reference tree for a similarity matrix.
    Tree(TreeFlags),
    /// Serve the noisy oracle over stdin/stdout using the predictor protocol.
    #[command(hide = true)]
    Serve(ServeFlags),
}

#[derive(Args, Serialize, Default)]
pub struct SimulateFlags {
    /// orbit, grid or line
    #[arg(long)]
    scene: Option<String>,
    #[arg(long)]
    views: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    /// Focal length in pixels (default: image width).
    #[arg(long)]
    focal: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize, Default, Clone)]
pub struct NoiseFlags {
    /// Per-axis std of the rotation error of each prediction (rad).
    #[arg(long)]
    sigma_rot: Option<f64>,
    #[arg(long)]
    sigma_trans: Option<f64>,
    /// Std of the log-scale error of each prediction.
    #[arg(long)]
    sigma_scale: Option<f64>,
    /// Per-point std of the correlated point noise.
    #[arg(long)]
    sigma_point: Option<f64>,
    /// Correlation length of the point noise as a fraction of the width.
    #[arg(long)]
    point_corr: Option<f64>,
    /// Confidence decay rate with noise magnitude.
    #[arg(long)]
    conf_eta: Option<f64>,
}

#[derive(Args, Serialize, Default)]
pub struct ReconstructFlags {
    /// Scene bundle directory written by `simulate`.
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Similarity matrix (CSV or PMAP) replacing the bundle's sim.csv.
    #[arg(long)]
    sim: Option<PathBuf>,
    /// oracle, toynet or external
    #[arg(long)]
    predictor: Option<String>,
    /// Program speaking the predictor protocol (external predictor).
    #[arg(long)]
    predictor_cmd: Option<String>,
    /// Argument passed to the predictor program; repeatable.
    #[arg(long = "predictor-arg", allow_hyphen_values = true)]
    predictor_args: Option<Vec<String>>,
    /// mst or spt
    #[arg(long)]
    tree: Option<String>,
    /// Tree root (default: the view with the largest total similarity).
    #[arg(long)]
    root: Option<usize>,
    /// Number of keyframe roots; above 1 builds a forest.
    #[arg(long)]
    roots: Option<usize>,
    /// Depth-halving compression passes.
    #[arg(long)]
    compress: Option<usize>,
    /// direct (chained prediction) or align (pairwise inference then alignment)
    #[arg(long)]
    mode: Option<String>,
    /// Raw confidence below which pixels are ignored by PnP and the cloud.
    #[arg(long)]
    conf_threshold: Option<f64>,
    /// Fixed focal length instead of estimating it from the root pointmap.
    #[arg(long)]
    focal: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    noise: NoiseFlags,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize, Default)]
pub struct EnsembleFlags {
    /// Reconstruction directories, manifests or poses.json files.
    #[arg(long, num_args = 1..)]
    runs: Option<Vec<PathBuf>>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    cost_tol: Option<f64>,
    /// Depth weight decay rate.
    #[arg(long)]
    depth_decay: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize, Default)]
pub struct EvaluateFlags {
    /// Predicted poses.json or reconstruction directory.
    #[arg(long)]
    pred: Option<PathBuf>,
    /// Ground-truth poses.json or scene directory.
    #[arg(long)]
    gt: Option<PathBuf>,
    /// Also score the point clouds (needs both directories).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    clouds: Option<bool>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize, Default)]
pub struct TreeFlags {
    /// Similarity matrix (CSV or PMAP).
    #[arg(long)]
    sim: Option<PathBuf>,
    /// Scene bundle whose sim.csv to use.
    #[arg(long)]
    scene: Option<PathBuf>,
    #[arg(long)]
    tree: Option<String>,
    #[arg(long)]
    root: Option<usize>,
    #[arg(long)]
    roots: Option<usize>,
    #[arg(long)]
    compress: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Also write tree.dot.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    dot: Option<bool>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize, Default)]
pub struct ServeFlags {
    #[arg(long)]
    scene: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    noise: NoiseFlags,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return settings::usage("--threads must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let config = cli.config.as_deref();
    match &cli.command {
        Command::Simulate(f) => commands::simulate::run(config, f),
        Command::Reconstruct(f) => commands::reconstruct::run(config, f),
        Command::Ensemble(f) => commands::ensemble::run(config, f),
        Command::Evaluate(f) => commands::evaluate::run(config, f),
        Command::Tree(f) => commands::tree::run(config, f),
        Command::Serve(f) => commands::serve::run(config, f),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("increg: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use edgealloc::generator::Structure;
use edgealloc::milp::Objective;
use edgealloc::solver::SolverKind;

/// Design-time task allocation for edge/hub/cloud systems.
#[derive(Parser, Debug)]
#[command(name = "edgealloc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Expand a task graph into its ETFG and write JSON and DOT renderings
    Transform(InputArgs),
    /// Solve the allocation problem and write the solution
    Solve(SolveArgs),
    /// Evaluate the E/H/C extremes against both optimal allocations
    Baseline(SolveArgs),
    /// Generate a random benchmark task graph with synthesized parameters
    Generate(GenerateArgs),
    /// Write the model as MPS and LP files
    Export(ModelArgs),
    /// Print graph and model statistics
    Stats(ModelArgs),
}

#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    /// Task graph JSON, or `builtin:inspection` for the 15-task inspection pipeline
    #[arg(long)]
    pub tfg: String,
    /// C1, C2, C3 or a system-model JSON path
    #[arg(long, default_value = "C1")]
    pub config: String,
    /// run1, run2 or a channel-profile JSON path
    #[arg(long, default_value = "run1")]
    pub channel_profile: String,
    /// Seed for parameter synthesis of built-in graphs
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output directory
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value = "latency")]
    pub objective: Objective,
    /// Latency threshold for the energy objective, e.g. 8000ms [default: 8s]
    #[arg(long)]
    pub lthr: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct SolveArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// auto, bruteforce, tree-dp or bnb
    #[arg(long, default_value = "auto")]
    pub solver: SolverKind,
    /// Wall-clock limit for branch-and-bound, e.g. 60s
    #[arg(long)]
    pub time_limit: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Solve in exact rational arithmetic
    #[arg(long)]
    pub exact: bool,
}

#[derive(Args, Debug, Clone)]
pub struct GenerateArgs {
    #[arg(long)]
    pub structure: Structure,
    #[arg(long)]
    pub nodes: usize,
    #[arg(long, default_value_t = 2)]
    pub max_in: usize,
    #[arg(long, default_value_t = 2)]
    pub max_out: usize,
    /// Fraction of tasks pinned to the edge device
    #[arg(long, default_value_t = 0.0)]
    pub fixed_edge: f64,
    /// Fraction of tasks pinned to the hub device
    #[arg(long, default_value_t = 0.0)]
    pub fixed_hub: f64,
    /// Chance of each optional arc [default: 1 for serial, 0.3 otherwise]
    #[arg(long)]
    pub extra_arcs: Option<f64>,
    /// Parameter-range JSON [default: shipped ranges]
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// C1, C2, C3 or a system-model JSON path
    #[arg(long, default_value = "C1")]
    pub config: String,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

/// Input that could not be parsed or failed validation.
#[derive(Debug)]
pub struct Invalid(pub String);

impl std::fmt::Display for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

/// Process exit status beyond plain success.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    Infeasible,
    TimeLimit,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Transform(a) => commands::transform(&a),
        Command::Solve(a) => commands::solve(&a),
        Command::Baseline(a) => commands::baseline(&a),
        Command::Generate(a) => commands::generate(&a),
        Command::Export(a) => commands::export(&a),
        Command::Stats(a) => commands::stats(&a),
    };
    match result {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Infeasible) => ExitCode::from(3),
        Ok(Outcome::TimeLimit) => ExitCode::from(4),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Invalid>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

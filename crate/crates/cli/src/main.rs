use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use netobserve_core::FieldKind;
use serde::Serialize;

mod commands;
mod error;

#[derive(Debug, Parser)]
#[command(name = "netobserve", version, about = "Structural observability analysis and agent network design")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: GlobalArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GlobalArgs {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Field for numerical checks: `gf` for rank checks by default, `real`
    /// for simulation (which accepts nothing else).
    #[arg(long, global = true, value_enum)]
    pub field: Option<FieldArg>,
    /// Directory for output files; without it the main report goes to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldArg {
    Gf,
    Real,
}

impl From<FieldArg> for FieldKind {
    fn from(f: FieldArg) -> Self {
        match f {
            FieldArg::Gf => FieldKind::Gf,
            FieldArg::Real => FieldKind::Real,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Gml,
    Edgelist,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InputArgs {
    /// Network file (GML or edge list).
    pub input: PathBuf,
    #[command(flatten)]
    pub read: ReadArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReadArgs {
    /// Input format; guessed from the extension when absent (`.gml` or edge list).
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Treat every edge as bidirectional.
    #[arg(long)]
    pub undirected: bool,
    /// Remove nodes without incident edges.
    #[arg(long, conflicts_with = "largest")]
    pub drop_isolates: bool,
    /// Keep only the largest weakly connected component.
    #[arg(long)]
    pub largest: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Structural decomposition: rank, contractions, component taxonomy.
    Analyze(AnalyzeArgs),
    /// Necessary measurements and their interchangeable alternatives.
    Classify(InputArgs),
    /// Observation plan plus a verified agent network.
    Design(DesignArgs),
    /// Check an agent network against a graph.
    Verify(VerifyArgs),
    /// Run the networked estimator on a realization of the graph.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AnalyzeArgs {
    /// Network files or directories of them (processed in parallel).
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[command(flatten)]
    pub read: ReadArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DesignArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Number of agents; defaults to one per placement.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub agents: Option<u64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Agent network JSON as written by `design`.
    #[arg(long)]
    pub network: PathBuf,
    /// Observation plan JSON; every planned state must be measured.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    /// Also compare against the numerical rank of random realizations.
    #[arg(long)]
    pub numeric: bool,
    /// Number of realizations for `--numeric`.
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    pub seeds: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Agent network JSON; the canonical design is used when absent.
    #[arg(long)]
    pub network: Option<PathBuf>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub agents: Option<u64>,
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    pub horizon: u64,
    /// Spectral radius the realized A is scaled to.
    #[arg(long, default_value_t = 1.1)]
    pub rho_a: f64,
    #[arg(long, default_value_t = 0.1)]
    pub process_std: f64,
    #[arg(long, default_value_t = 0.1)]
    pub measurement_std: f64,
    /// Spectral-radius evaluations allowed to the gain search.
    #[arg(long, default_value_t = 10_000)]
    pub budget: usize,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Analyze(a) => commands::analyze(&cli.global, a),
        Command::Classify(a) => commands::classify(&cli.global, a),
        Command::Design(a) => commands::design(&cli.global, a),
        Command::Verify(a) => commands::verify(&cli.global, a),
        Command::Simulate(a) => commands::simulate(&cli.global, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

//! `ferrolearn` — generate instances, learn them, and certify the result.
//!
//! Exit codes: 0 when every certificate passes, 2 when one fails, 1 on error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

mod commands;

#[derive(Parser, Debug)]
#[command(name = "ferrolearn", version, about = "Learn Gaussian-plus-few-gates fermionic unitaries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a random circuit instance.
    Gen(GenArgs),
    /// Run the learner once and emit the learned description.
    Learn(LearnArgs),
    /// Repeat the learner over several seeded trials and tabulate certificates.
    Diagnose(DiagnoseArgs),
    /// Probe the matchgate hierarchy.
    Hierarchy(HierarchyArgs),
    /// Print the prescribed shot budgets.
    Budgets(BudgetArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PathArg {
    Fermionic,
    Qubit,
}

impl From<PathArg> for ferrolearn::Path {
    fn from(p: PathArg) -> Self {
        match p {
            PathArg::Fermionic => ferrolearn::Path::Fermionic,
            PathArg::Qubit => ferrolearn::Path::Qubit,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Exact,
    Sampled,
}

/// Where the circuit comes from: a file, or generation parameters.
#[derive(Args, Clone, Debug, Serialize)]
pub struct CircuitArgs {
    /// Circuit JSON produced by `gen`; overrides the generation flags.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub t: usize,
    #[arg(long, default_value_t = 4)]
    pub kappa: usize,
    #[arg(long, value_enum, default_value_t = PathArg::Fermionic)]
    pub path: PathArg,
    /// Seed for instance generation and, in sampled mode, for measurement noise.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct SamplingArgs {
    #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[command(flatten)]
    pub circuit: CircuitArgs,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct LearnArgs {
    #[command(flatten)]
    pub circuit: CircuitArgs,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    /// Learned description JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Certificate table.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Run report JSON; stdout when omitted.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub circuit: CircuitArgs,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    /// Report JSON; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-trial table (trial, seed, ε, measured errors, bounds, verdict).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Singular values of the first trial, one row per index.
    #[arg(long)]
    pub sv_csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct HierarchyArgs {
    /// Odd denominator of the witness angle π/p.
    #[arg(long, default_value_t = 3)]
    pub p: u32,
    #[arg(long = "k-max", default_value_t = 8)]
    pub k_max: usize,
    #[arg(long, default_value_t = 2)]
    pub mu: usize,
    /// Probe a circuit instead of the witness.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BudgetArgs {
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    /// Register size for the channel-stage budgets.
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    /// CSV instead of an aligned table.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

fn main() -> ExitCode {
    // clap's own usage-error code (2) would collide with a certificate failure
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Gen(a) => commands::gen(&a),
        Command::Learn(a) => commands::learn(&a),
        Command::Diagnose(a) => commands::diagnose(&a),
        Command::Hierarchy(a) => commands::hierarchy(&a),
        Command::Budgets(a) => commands::budgets(&a),
    };
    match outcome {
        Ok(commands::Verdict::Pass) => ExitCode::SUCCESS,
        Ok(commands::Verdict::Fail) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

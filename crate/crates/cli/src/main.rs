//! `mindiag`: generate family matrices, compute minimal diagonal
//! perturbations, certify minimality and run truncation sweeps.
//!
//! Exit codes: 0 success, 1 internal failure, 2 usage error, 3 input could
//! not be loaded, 4 solver hit its iteration budget (report still written),
//! 5 degenerate spectrum, 6 instance too large for the oracle.

mod commands;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "mindiag", version, about = "Minimal diagonal perturbations of symmetric matrices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a member of the γ-family as a matrix file.
    Gen(GenArgs),
    /// Minimize ‖C + Diag(d)‖ over d and report bounds.
    Approx(ApproxArgs),
    /// Decide whether C + D₁ is already minimal.
    Certify(CertifyArgs),
    /// Solve a family member over several truncation sizes and write CSV.
    Sweep(SweepArgs),
    /// Brute-force grid search for n ≤ 4.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyName {
    Gamma,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<String>,
    /// Indent JSON and print a short summary on stderr.
    #[arg(long)]
    pub pretty: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenArgs {
    #[arg(long, value_enum, default_value_t = FamilyName::Gamma)]
    pub family: FamilyName,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: f64,
    #[arg(long)]
    pub n: usize,
    /// T, T1, D_seq, Tr, TrPlusD, Q, R or C_a.
    #[arg(long, default_value = "T")]
    pub variant: String,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolveArgs {
    /// Relative gap at which the solver reports convergence.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, env = "MINDIAG_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 4)]
    pub multistart: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ApproxArgs {
    #[arg(long)]
    pub input: String,
    #[command(flatten)]
    pub solve: SolveArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CertifyArgs {
    #[arg(long)]
    pub input: String,
    /// JSON file with the diagonal D₁: an object with `d` or `d_star`, or a
    /// matrix file whose diagonal is used. Defaults to zero.
    #[arg(long)]
    pub diag: Option<String>,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = mindiag::spectral::DEFAULT_CLUSTER_TOL)]
    pub cluster_tol: f64,
    #[arg(long, default_value_t = mindiag::certificates::DEFAULT_HULL_TOL)]
    pub hull_tol: f64,
    /// Also test the orthogonal-column hypotheses at this column (1-based).
    #[arg(long)]
    pub i0: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long, value_enum, default_value_t = FamilyName::Gamma)]
    pub family: FamilyName,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: f64,
    #[arg(long, default_value = "Tr")]
    pub variant: String,
    #[arg(long, value_delimiter = ',', required = true)]
    pub n_list: Vec<usize>,
    /// Diagonal entries to track as CSV columns (1-based).
    #[arg(long, value_delimiter = ',')]
    pub track_diag: Vec<usize>,
    /// Worker threads for independent sizes.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[command(flatten)]
    pub solve: SolveArgs,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<String>,
    /// Print a short summary on stderr.
    #[arg(long)]
    pub pretty: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OracleArgs {
    #[arg(long)]
    pub input: String,
    /// Half-width of the initial box; defaults to 2‖C‖.
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub levels: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(code) => code.into(),
        Err(e) => {
            eprintln!("mindiag: {e}");
            e.exit_code().into()
        }
    }
}

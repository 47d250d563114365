//! Command-line grammar.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qutrit_floquet::engine::UxMode;
use qutrit_floquet::ops::Axis;

use crate::config::{EngineKind, MpsMode};

#[derive(Debug, Parser)]
#[command(name = "qutrit-floquet", version, about = "Spin-1 Floquet chain simulator")]
#[command(after_help = "Worker threads for sweeps follow RAYON_NUM_THREADS.\n\
Exit codes: 0 success, 1 i/o error, 2 configuration error, 3 verification failure, 4 engine failure.")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact statevector evolution from |0…0⟩
    Evolve(RunArgs),
    /// TEBD evolution (finite chain or two-site iTEBD)
    MpsEvolve(MpsArgs),
    /// Time-averaged observables on a (θ_x, θ_z) grid
    Sweep(SweepArgs),
    /// Compile couplings or a whole cycle to native qudit gates and verify them
    CompileCheck(CompileArgs),
    /// Evaluate the perturbative thermalization step n_t
    PredictNt(PredictArgs),
    /// Regenerate the datasets behind a figure
    Reproduce(ReproduceArgs),
    /// Operator tables
    Ops {
        #[command(subcommand)]
        command: OpsCommand,
    },
}

/// Flags shared by the evolution commands. Flags override values from `--config`.
#[derive(Debug, Args, Clone, Default)]
pub struct RunArgs {
    /// JSON or TOML run configuration
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "L", visible_alias = "sites")]
    pub sites: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub theta_x: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub theta_z: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub epsilon: Option<f64>,
    /// Record every `stride` steps
    #[arg(long)]
    pub stride: Option<usize>,
    #[arg(long, value_parser = parse_ux_mode)]
    pub ux_mode: Option<UxMode>,
    /// Comma-separated: overlap, mean_Sz, entropy_half, fQ, zz_i_j
    #[arg(long, value_delimiter = ',')]
    pub observables: Option<Vec<String>>,
    /// Output directory; CSV goes to stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct MpsArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub chi_cap: Option<usize>,
    #[arg(long)]
    pub tebd_tol: Option<f64>,
    #[arg(long)]
    pub trotter_substeps: Option<usize>,
    #[arg(long, value_enum)]
    pub mode: Option<MpsMode>,
}

#[derive(Debug, Args, Clone)]
pub struct SweepArgs {
    /// JSON or TOML run configuration with a `sweep` table
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// θ_x axis as start:end:points
    #[arg(long)]
    pub grid_x: Option<String>,
    /// θ_z axis as start:end:points
    #[arg(long)]
    pub grid_z: Option<String>,
    #[arg(long = "L", visible_alias = "sites")]
    pub sites: Option<usize>,
    #[arg(long)]
    pub cycles: Option<usize>,
    #[arg(long, value_enum)]
    pub engine: Option<EngineKind>,
    /// Comma-separated subset of overlap, entropy, qfi
    #[arg(long, value_delimiter = ',')]
    pub observables: Option<Vec<String>>,
    #[arg(long, allow_negative_numbers = true)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub tebd_tol: Option<f64>,
    #[arg(long)]
    pub chi_cap: Option<usize>,
    /// Also write gnuplot matrix files
    #[arg(long)]
    pub matrix: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Clone)]
pub struct CompileArgs {
    /// Coupling axis (x or z)
    #[arg(long, value_parser = parse_axis, default_value = "x")]
    pub axis: Axis,
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.5)]
    pub theta: f64,
    /// Also fold the Z phase gates into a software phase ledger and check it
    #[arg(long)]
    pub ledger: bool,
    /// Verify a full Floquet cycle on L sites instead of a single coupling
    #[arg(long)]
    pub cycle: bool,
    #[arg(long = "L", default_value_t = 3)]
    pub sites: usize,
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.2)]
    pub theta_x: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 1.0)]
    pub theta_z: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    pub epsilon: f64,
    /// Residual threshold for full cycles
    #[arg(long, default_value_t = 1e-8)]
    pub threshold: f64,
    /// Include the native gate list in the report
    #[arg(long)]
    pub emit: bool,
}

#[derive(Debug, Args, Clone)]
pub struct PredictArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub theta_x: f64,
    /// Single θ_z value
    #[arg(long, allow_negative_numbers = true, conflicts_with = "grid_z")]
    pub theta_z: Option<f64>,
    /// θ_z axis as start:end:points; prints CSV
    #[arg(long)]
    pub grid_z: Option<String>,
    #[arg(long = "L")]
    pub sites: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Fig2,
    Fig3,
    Fig4a,
    Fig4c,
    Fig5a,
    Fig5b,
    Fig5c,
    Dips,
}

#[derive(Debug, Args, Clone)]
pub struct ReproduceArgs {
    #[arg(value_enum)]
    pub figure: Figure,
    #[arg(long, default_value = "reproduce")]
    pub out: PathBuf,
    /// Original system sizes and run lengths instead of the desk-scale defaults
    #[arg(long)]
    pub full: bool,
}

#[derive(Debug, Subcommand)]
pub enum OpsCommand {
    /// Print operator matrices as JSON
    Dump {
        /// Operator name; all operators when omitted
        #[arg(long)]
        name: Option<String>,
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.5)]
        theta: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
        phi: f64,
    },
}

fn parse_ux_mode(s: &str) -> Result<UxMode, String> {
    s.parse()
}

fn parse_axis(s: &str) -> Result<Axis, String> {
    s.parse::<Axis>().map_err(|e| e.to_string())
}

use clap::{Args, Parser, Subcommand, ValueEnum};
use envest_core::solver::Algorithm;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "envest", version, about = "Envelope estimation for multivariate regression")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit an envelope model to CSV data.
    Fit(FitArgs),
    /// Run population or sample simulation experiments.
    Simulate(SimulateArgs),
    /// Select the envelope dimension by BIC or cross-validation.
    SelectU(SelectArgs),
    /// Residual-bootstrap standard errors of the OLS and envelope coefficients.
    Bootstrap(BootstrapArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlgoArg {
    Onedim,
    Fg,
    FgWarm,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Onedim => Algorithm::OneDim,
            AlgoArg::Fg => Algorithm::Fg,
            AlgoArg::FgWarm => Algorithm::FgWarm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KindArg {
    Response,
    Partial,
    Predictor,
    Mean,
    ConstrainedMean,
}

impl KindArg {
    pub fn needs_x(self) -> bool {
        !matches!(self, KindArg::Mean | KindArg::ConstrainedMean)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Population,
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    Bic,
    Cv,
}

/// Solver tolerance overrides shared by every command.
#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SolverArgs {
    /// Tangential-gradient tolerance of each one-dimensional solve.
    #[arg(long)]
    pub onedim_tol: Option<f64>,
    /// Inner iteration cap of each one-dimensional solve.
    #[arg(long)]
    pub onedim_max_iter: Option<usize>,
    /// Extra random starts per one-dimensional solve.
    #[arg(long)]
    pub extra_starts: Option<usize>,
    /// Projected-gradient tolerance of the Grassmann solver.
    #[arg(long)]
    pub fg_tol: Option<f64>,
    /// Iteration cap of the Grassmann solver.
    #[arg(long)]
    pub fg_max_iter: Option<usize>,
}

/// Response and predictor data files.
#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct DataArgs {
    #[arg(long, value_enum)]
    pub kind: KindArg,
    /// Predictor matrix (n×p); not used by the mean kinds.
    #[arg(long)]
    pub x: Option<PathBuf>,
    /// Response matrix (n×r).
    #[arg(long)]
    pub y: PathBuf,
    /// Number of leading predictor columns of interest (partial kind only).
    #[arg(long)]
    pub p1: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub u: usize,
    #[arg(long, value_enum, default_value = "onedim")]
    pub algo: AlgoArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub include_timing: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub mode: ModeArg,
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub u: usize,
    /// Sample size (sample mode only).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    /// Algorithms to run; repeat the flag or separate with commas.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "onedim")]
    pub algo: Vec<AlgoArg>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Also write the algorithm × metric summary grid as CSV.
    #[arg(long)]
    #[serde(skip)]
    pub csv_summary: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub include_timing: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SelectArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value = "bic")]
    pub method: MethodArg,
    /// Largest dimension considered; defaults to the full dimension.
    #[arg(long)]
    pub u_max: Option<usize>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, value_enum, default_value = "onedim")]
    pub algo: AlgoArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct BootstrapArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub u: usize,
    /// Number of bootstrap replicates.
    #[arg(long = "b", default_value_t = 100)]
    pub bootstrap_b: usize,
    #[arg(long, value_enum, default_value = "onedim")]
    pub algo: AlgoArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

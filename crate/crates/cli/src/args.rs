use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gausslin::QuadratureConfig;

#[derive(Debug, Parser)]
#[command(
    name = "gausslin",
    version,
    about = "Optimal L^p estimation under Gaussian noise"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate the optimal estimator f(y) on a grid.
    Estimate(EstimateArgs),
    /// Check whether y ↦ A y satisfies the orthogonality condition.
    Verify(VerifyArgs),
    /// Build a cosine-modulated prior for p > 2.
    ConstructPrior(ConstructArgs),
    /// Densities of the cosine-modulated family at ω = 0 and the first admissible ω.
    Fig1(Fig1Args),
    /// Fit the best linear map to the optimal estimator and report the deviation.
    ScanLinearity(EstimateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output file (written atomically); standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Seed for any randomized step.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct QuadArgs {
    #[arg(long = "half-width")]
    pub half_width: Option<f64>,
    /// Nodes per dimension (odd).
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
}

impl QuadArgs {
    pub fn config(&self) -> QuadratureConfig {
        let d = QuadratureConfig::default();
        QuadratureConfig {
            half_width: self.half_width.unwrap_or(d.half_width),
            nodes_per_dim: self.nodes.unwrap_or(d.nodes_per_dim),
            tol: self.tol.unwrap_or(d.tol),
        }
    }
}

#[derive(Debug, Args)]
pub struct LossArgs {
    /// Outer exponent p ≥ 1.
    #[arg(long, allow_negative_numbers = true)]
    pub p: f64,
    /// Inner exponent k ≥ 1 (defaults to p).
    #[arg(long, allow_negative_numbers = true)]
    pub k: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Prior file (JSON).
    #[arg(long)]
    pub prior: PathBuf,
    #[command(flatten)]
    pub loss: LossArgs,
    /// Observation grid `min:max:step`, applied to every coordinate.
    #[arg(long = "y-range", allow_hyphen_values = true)]
    pub y_range: String,
    #[command(flatten)]
    pub quad: QuadArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub base: EstimateArgs,
    /// Matrix A: rows separated by ';', entries by ','.
    #[arg(long = "A", allow_hyphen_values = true)]
    pub a: String,
}

#[derive(Debug, Args)]
pub struct ConstructArgs {
    /// Loss exponent p > 2.
    #[arg(long, allow_negative_numbers = true)]
    pub p: f64,
    /// Target linear gain a in (0, 1).
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub a: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub rho: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub theta: f64,
    /// Which positive admissible ω to use (0 = smallest).
    #[arg(long, default_value_t = 0)]
    pub select: usize,
    /// Density table path; defaults to `<out>.density.<format>` when --out is given.
    #[arg(long)]
    pub density: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct Fig1Args {
    #[arg(long, default_value_t = 4.0, allow_negative_numbers = true)]
    pub p: f64,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub a: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub rho: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub theta: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

//! `mzkit`: command-line front end for the kernel and sampling diagnostics.
//!
//! Exit codes: 0 on success, 1 on input errors, 2 when a numerical or size
//! cap is hit.

mod commands;
mod klist;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "mzkit", version, about = "Weighted polynomial kernels on the ball and sampling diagnostics")]
struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
enum Command {
    /// Orthonormal basis coefficients (CSV, graded-lex monomial columns).
    Basis(BasisCmd),
    /// Christoffel function table on a grid, optionally with kernel matrices.
    Kernel(KernelCmd),
    /// Full diagnostics battery for a point family.
    Diag(DiagCmd),
    /// Carleson ratios of the Christoffel-weighted level measures.
    Carleson(FamilyCmd),
    /// Separation constants k * min distance per level.
    Separation(FamilyCmd),
    /// Counts versus equilibrium masses in regions.
    Density(DensityCmd),
    /// Localized kernels: diagonal sandwich, decay and weighted integrals.
    Localized(LocalizedCmd),
    /// Transport gap and off-diagonal moment trends.
    Transport(TransportCmd),
    /// Bessel scaling limit, zero-distance test and orthogonality search.
    Scaling(ScalingCmd),
    /// Generate a point family.
    Generate(GenerateCmd),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct MeasureArgs {
    /// Domain: ball, box or ellipsoid.
    #[arg(long = "measure", default_value = "ball")]
    pub kind: String,
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    /// Ball weight exponent in (1-|x|^2)^(a-1/2).
    #[arg(long)]
    pub a: Option<f64>,
    /// Box bounds as `lo:hi,lo:hi,..`.
    #[arg(long, allow_hyphen_values = true)]
    pub bounds: Option<String>,
    /// Ellipsoid semiaxes as `s1,s2,..`.
    #[arg(long)]
    pub semiaxes: Option<String>,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum PathArg {
    Auto,
    Monomial,
    Recurrence,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct BasisArgs {
    /// double or extended; defaults to $MZKIT_PRECISION, then double.
    #[arg(long)]
    pub precision: Option<String>,
    #[arg(long, value_enum, default_value_t = PathArg::Auto)]
    pub path: PathArg,
    /// Overrides the monomial-path degree cap.
    #[arg(long)]
    pub degree_cap: Option<usize>,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct OutArgs {
    /// Output file; standard output when absent. Not part of the recorded
    /// configuration, so a report does not depend on where it is written.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format; inferred from the --out extension when absent.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Args, Debug, Serialize)]
pub struct BasisCmd {
    #[command(flatten)]
    pub measure: MeasureArgs,
    #[command(flatten)]
    pub basis: BasisArgs,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct KernelCmd {
    #[command(flatten)]
    pub measure: MeasureArgs,
    #[command(flatten)]
    pub basis: BasisArgs,
    /// Degree list, e.g. `5,10,20` or `1..40`.
    #[arg(long)]
    pub k: String,
    /// JSON array of points; an interior grid is used when absent.
    #[arg(long)]
    pub points: Option<PathBuf>,
    /// Size of the interior grid.
    #[arg(long, default_value_t = 50)]
    pub grid: usize,
    /// Include kernel matrices on the points (JSON only).
    #[arg(long)]
    pub matrix: bool,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct DiagCmd {
    #[arg(long)]
    pub family: PathBuf,
    #[command(flatten)]
    pub measure: MeasureArgs,
    #[command(flatten)]
    pub basis: BasisArgs,
    /// lebesgue or weighted ball volumes in the Carleson ratio.
    #[arg(long, default_value = "lebesgue")]
    pub reference: String,
    #[arg(long, default_value_t = mzkit::diagnostics::DEFAULT_NET_BUDGET)]
    pub net_budget: usize,
    #[arg(long)]
    pub no_carleson: bool,
    /// Density region: `euclid:c1,..,cn:r` or `rho:c1,..,cn:r` (repeatable).
    #[arg(long = "region", allow_hyphen_values = true)]
    pub regions: Vec<String>,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct FamilyCmd {
    #[arg(long)]
    pub family: PathBuf,
    #[command(flatten)]
    pub measure: MeasureArgs,
    #[command(flatten)]
    pub basis: BasisArgs,
    #[arg(long, default_value = "lebesgue")]
    pub reference: String,
    #[arg(long, default_value_t = mzkit::diagnostics::DEFAULT_NET_BUDGET)]
    pub net_budget: usize,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct DensityCmd {
    #[arg(long)]
    pub family: PathBuf,
    #[command(flatten)]
    pub measure: MeasureArgs,
    #[arg(long = "region", allow_hyphen_values = true, required = true)]
    pub regions: Vec<String>,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct LocalizedCmd {
    #[command(flatten)]
    pub measure: MeasureArgs,
    #[command(flatten)]
    pub basis: BasisArgs,
    #[arg(long)]
    pub k: String,
    #[arg(long, default_value_t = 25)]
    pub grid: usize,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 4.0)]
    pub gamma: f64,
    /// Also fit the off-diagonal decay exponent along a ray from the origin.
    #[arg(long)]
    pub decay: bool,
    #[arg(long, default_value_t = 256)]
    pub decay_samples: usize,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct TransportCmd {
    #[command(flatten)]
    pub measure: MeasureArgs,
    #[command(flatten)]
    pub basis: BasisArgs,
    #[arg(long)]
    pub k: String,
    /// Point family; the 1D Gauss family of the measure when absent.
    #[arg(long)]
    pub family: Option<PathBuf>,
    /// Quadrature order of the discretized target, as a multiple of k.
    #[arg(long, default_value_t = 8)]
    pub quad_factor: usize,
    /// Skip the off-diagonal moment column.
    #[arg(long)]
    pub no_moment: bool,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum ScalingMode {
    Limit,
    Zeros,
    Search,
}

#[derive(Args, Debug, Serialize)]
pub struct ScalingCmd {
    #[arg(long, value_enum, default_value_t = ScalingMode::Limit)]
    pub mode: ScalingMode,
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long, default_value_t = 0.5)]
    pub a: f64,
    /// Degree list (limit) or a single degree (search).
    #[arg(long, default_value = "20,40,80")]
    pub k: String,
    #[arg(long = "R", alias = "radius", default_value_t = 5.0)]
    pub radius: f64,
    /// Grid points per axis on [-R, R].
    #[arg(long, default_value_t = 101)]
    pub grid: usize,
    #[command(flatten)]
    pub basis: BasisArgs,
    /// zeros: JSON array of points.
    #[arg(long)]
    pub points: Option<PathBuf>,
    /// zeros: Bessel order; n/2 when absent.
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// search: number of points.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub restarts: usize,
    #[arg(long, default_value_t = mzkit::scaling::SEARCH_ITERATION_CAP)]
    pub iteration_cap: usize,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct GenerateCmd {
    /// gauss_1d, tensor_gauss, random_separated or equilibrium_random.
    #[arg(long)]
    pub kind: String,
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long, default_value_t = 0.5)]
    pub a: f64,
    #[arg(long)]
    pub k: String,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub target: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Cap(String),
}

impl From<mzkit::Error> for CliError {
    fn from(e: mzkit::Error) -> Self {
        if e.is_numerical_cap() {
            CliError::Cap(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
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
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Cap(msg)) => {
            eprintln!("error (numerical cap): {msg}");
            ExitCode::from(2)
        }
    }
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Basis(_) => "basis",
            Command::Kernel(_) => "kernel",
            Command::Diag(_) => "diag",
            Command::Carleson(_) => "carleson",
            Command::Separation(_) => "separation",
            Command::Density(_) => "density",
            Command::Localized(_) => "localized",
            Command::Transport(_) => "transport",
            Command::Scaling(_) => "scaling",
            Command::Generate(_) => "generate",
        }
    }
}

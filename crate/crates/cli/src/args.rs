use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Fixed-step Runge-Kutta integrators with MQ/IMQ shape-parameter corrections.
#[derive(Debug, Parser)]
#[command(name = "rbfrk", version, args_override_self = true)]
pub struct Cli {
    /// TOML file whose keys mirror the command-line flags.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List methods and problems.
    #[command(args_override_self = true)]
    List(ListArgs),
    /// Integrate one problem with one method.
    #[command(args_override_self = true)]
    Solve(SolveArgs),
    /// Convergence study over a doubling list of step counts.
    #[command(args_override_self = true)]
    Study(StudyArgs),
    /// Rasterize a stability region.
    #[command(args_override_self = true)]
    Stability(StabilityArgs),
    /// Check the order conditions of a tableau.
    #[command(args_override_self = true)]
    CheckTableau(CheckArgs),
    /// Run every reference study and write one report.
    #[command(args_override_self = true)]
    Repro(ReproArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Md,
    Pgm,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Norm {
    Max,
    Endpoint,
    GridL1,
}

impl From<Norm> for rbfrk::ErrorNorm {
    fn from(n: Norm) -> Self {
        match n {
            Norm::Max => rbfrk::ErrorNorm::Max,
            Norm::Endpoint => rbfrk::ErrorNorm::Endpoint,
            Norm::GridL1 => rbfrk::ErrorNorm::GridL1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Exact,
    Polynomial,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Output file (stdout when omitted). Relative paths are placed under
    /// `$RBFRK_OUT_DIR` when it is set.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ListArgs {
    #[arg(long, value_enum, default_value = "md")]
    pub format: Format,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub problem: String,
    #[arg(long)]
    pub method: String,
    /// Number of steps.
    #[arg(long)]
    pub n: usize,
    /// Rate of the `dahlquist` problem.
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    pub lambda: f64,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Write per-step shape parameters to this CSV.
    #[arg(long, value_name = "FILE")]
    pub trace: Option<PathBuf>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    #[arg(long)]
    pub problem: String,
    /// Comma-separated method names.
    #[arg(long, value_delimiter = ',', required = true)]
    pub methods: Vec<String>,
    /// Comma-separated doubling step counts, e.g. 10,20,40.
    #[arg(long, value_name = "LIST")]
    pub n: String,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    pub lambda: f64,
    #[arg(long, value_enum, default_value = "max")]
    pub norm: Norm,
    #[arg(long, value_enum, default_value = "md")]
    pub format: Format,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    #[arg(long)]
    pub method: String,
    #[arg(long, value_enum, default_value = "exact")]
    pub mode: Mode,
    /// re_min,re_max,im_min,im_max
    #[arg(long, default_value = "-3,1,-3,3", allow_hyphen_values = true)]
    pub window: String,
    /// Cells along the real and imaginary axes, e.g. 400x400.
    #[arg(long, default_value = "400x400")]
    pub res: String,
    #[arg(long, value_enum, default_value = "pgm")]
    pub format: Format,
    /// Also write the boundary cells as CSV.
    #[arg(long, value_name = "FILE")]
    pub boundary: Option<PathBuf>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub method: String,
    #[arg(long, value_enum, default_value = "md")]
    pub format: Format,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct ReproArgs {
    #[arg(long, value_enum, default_value = "md")]
    pub format: Format,
    #[command(flatten)]
    pub output: Output,
}

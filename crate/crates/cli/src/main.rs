//! Batch front end: CSV in, JSON or CSV out, one subcommand per run.
//!
//! Exit codes: 0 success, 2 usage, 3 data, 4 quantile too extreme for the
//! sample, 5 numerical failure. Every failure prints one machine-parsable
//! line on stderr: `error: <kind>: <detail>`.

mod commands;
mod ingest;
mod output;
mod simulate;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qlstat::unconditional::Side;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "qlstat", version, about = "Quantile confidence intervals from fractional order statistics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Confidence interval for a quantile of one CSV column
    Ci(CiArgs),
    /// Confidence interval for a conditional quantile at given covariates
    CondCi(CondCiArgs),
    /// Plug-in window width for a conditional interval, with provenance
    Bandwidth(BandwidthArgs),
    /// Monte Carlo coverage experiments from built-in or custom configs
    Simulate(SimulateArgs),
    /// Exact finite-sample coverage of the interval at a configuration
    Oracle(OracleArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SideArg {
    Lower,
    Upper,
    TwoSided,
}

impl SideArg {
    fn to_side(self) -> Side {
        match self {
            SideArg::Lower => Side::Lower,
            SideArg::Upper => Side::Upper,
            SideArg::TwoSided => Side::TwoSided,
        }
    }

    fn name(self) -> &'static str {
        match self {
            SideArg::Lower => "lower",
            SideArg::Upper => "upper",
            SideArg::TwoSided => "two-sided",
        }
    }
}

#[derive(Args)]
struct CiArgs {
    /// CSV file with a header row; stdin when omitted or "-"
    data: Option<PathBuf>,
    /// Column holding the sample
    #[arg(long)]
    col: String,
    /// Quantile level
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    /// Miscoverage level
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = SideArg::TwoSided)]
    side: SideArg,
    /// Apply the analytic coverage calibration to each tail
    #[arg(long)]
    calibrated: bool,
    /// Fraction of alpha spent on the low tail of a two-sided interval
    #[arg(long)]
    tail_split: Option<f64>,
    /// Known lower support bound; enables conservative substitution when
    /// the sample cannot pin the low endpoint
    #[arg(long, allow_hyphen_values = true)]
    bound_lower: Option<f64>,
    /// Known upper support bound
    #[arg(long, allow_hyphen_values = true)]
    bound_upper: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum JointArg {
    Bonferroni,
    IndependentWindows,
}

#[derive(Args)]
struct CondCiArgs {
    /// CSV file with a header row; stdin when omitted or "-"
    data: Option<PathBuf>,
    /// Response column
    #[arg(long)]
    y: String,
    /// Continuous covariate columns
    #[arg(long, value_delimiter = ',', required = true)]
    x: Vec<String>,
    /// Discrete covariate columns requiring exact matches
    #[arg(long, value_delimiter = ',')]
    discrete: Vec<String>,
    /// Evaluation coordinates; length must be a multiple of the number
    /// of continuous covariates
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    x0: Vec<f64>,
    /// Discrete covariate values to condition on
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    cell: Vec<f64>,
    /// Window width; computed by the plug-in rule when omitted
    #[arg(long)]
    h: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = SideArg::TwoSided)]
    side: SideArg,
    #[arg(long)]
    calibrated: bool,
    /// Share the error budget across all points simultaneously
    #[arg(long, value_enum)]
    joint: Option<JointArg>,
    /// Skip the large-sample widening of the plug-in width
    #[arg(long)]
    no_large_n: bool,
}

#[derive(Args)]
struct BandwidthArgs {
    /// CSV file with a header row; stdin when omitted or "-"
    data: Option<PathBuf>,
    /// Response column
    #[arg(long)]
    y: String,
    /// Continuous covariate column
    #[arg(long)]
    x: String,
    /// Evaluation point
    #[arg(long, allow_hyphen_values = true)]
    x0: f64,
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = SideArg::TwoSided)]
    side: SideArg,
    /// Skip the large-sample widening of the plug-in width
    #[arg(long)]
    no_large_n: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct SimulateArgs {
    /// Built-in experiment: 1, 2, calibration, fanliu, or rqss
    #[arg(long, conflicts_with = "config")]
    table: Option<String>,
    /// Custom experiment configuration (JSON)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Method rows to produce; only the interpolated L-statistic rows exist
    #[arg(long, default_value = "lstat")]
    rows: String,
    /// Override the configured replication count
    #[arg(long)]
    reps: Option<usize>,
    /// Override the configured seed
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
}

#[derive(Args)]
struct OracleArgs {
    /// Sample size
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = SideArg::TwoSided)]
    side: SideArg,
    #[arg(long)]
    calibrated: bool,
    #[arg(long)]
    tail_split: Option<f64>,
}

/// Failures carrying the exit-code contract.
pub enum CliError {
    Core(qlstat::Error),
    Usage(String),
    Data(String),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Data(_) => "data",
            CliError::Core(e) => match e {
                qlstat::Error::Domain(_) | qlstat::Error::ModeViolation(_) => "usage",
                qlstat::Error::DegenerateData(_)
                | qlstat::Error::InsufficientData { .. }
                | qlstat::Error::CollinearDesign
                | qlstat::Error::EmptyWindow { .. } => "data",
                qlstat::Error::ExtremeQuantile { .. } => "extreme_quantile",
                qlstat::Error::Numerical { .. } | qlstat::Error::CalibrationOverflow { .. } => {
                    "numerical"
                }
            },
        }
    }

    fn exit_code(&self) -> i32 {
        match self.kind() {
            "usage" => 2,
            "data" => 3,
            "extreme_quantile" => 4,
            _ => 5,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Core(e) => e.to_string(),
            CliError::Usage(m) | CliError::Data(m) => m.clone(),
        }
    }
}

impl From<qlstat::Error> for CliError {
    fn from(e: qlstat::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

fn init_thread_pool() {
    if let Ok(raw) = std::env::var("QLSTAT_THREADS") {
        match raw.parse::<usize>() {
            Ok(k) if k > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
            }
            _ => eprintln!("warning: ignoring QLSTAT_THREADS value '{raw}'"),
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Ci(args) => commands::run_ci(args),
        Command::CondCi(args) => commands::run_cond_ci(args),
        Command::Bandwidth(args) => commands::run_bandwidth(args),
        Command::Simulate(args) => simulate::run(args),
        Command::Oracle(args) => commands::run_oracle(args),
    }
}

fn main() {
    let cli = Cli::parse();
    init_thread_pool();
    if let Err(e) = dispatch(cli) {
        let msg = e.message().replace('\n', " ");
        eprintln!("error: {}: {msg}", e.kind());
        std::process::exit(e.exit_code());
    }
}

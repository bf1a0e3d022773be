use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod report;

use commands::CliError;

/// Phase estimation with squeezed vacuum probes.
///
/// Angles are radians unless --degrees is given, which converts angle inputs
/// only. Exit codes: 0 success, 1 validation error, 2 tolerance failure, 3 I/O error.
#[derive(Debug, Parser)]
#[command(name = "gaussphase", version)]
pub struct Cli {
    /// Output format for reports.
    #[arg(long, value_enum, global = true, default_value_t = Format::Text)]
    pub format: Format,

    /// Interpret angle inputs as degrees.
    #[arg(long, global = true)]
    pub degrees: bool,

    /// Worker threads for Monte Carlo runs (default: available cores). Never changes results.
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Quantum Fisher information, photon number and Heisenberg bound.
    #[command(allow_negative_numbers = true)]
    Qfi(QfiArgs),
    /// Grid of dyne Fisher information in the three equivalent forms.
    #[command(allow_negative_numbers = true)]
    FisherMap(FisherMapArgs),
    /// Ancilla squeezing threshold of the dyne measurement.
    #[command(allow_negative_numbers = true)]
    Threshold(ThresholdArgs),
    /// Best local-oscillator angle of the dyne measurement.
    #[command(allow_negative_numbers = true)]
    OptimalAngle(OptimalAngleArgs),
    /// Compare the truncated Fock oracle with closed forms.
    #[command(allow_negative_numbers = true)]
    OracleCheck(OracleCheckArgs),
    /// Run a two-step estimation experiment.
    #[command(allow_negative_numbers = true)]
    Simulate(SimulateArgs),
    /// Aggregate runs over increasing copy numbers.
    #[command(allow_negative_numbers = true)]
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
#[group(id = "squeezing", required = true, multiple = false)]
pub struct SqueezingChoice {
    /// Squeezing parameter r.
    #[arg(long, group = "squeezing")]
    pub r: Option<f64>,
    /// Mean photon number of a squeezed vacuum.
    #[arg(long, group = "squeezing")]
    pub nbar: Option<f64>,
}

#[derive(Debug, Args)]
pub struct QfiArgs {
    #[command(flatten)]
    pub squeezing: SqueezingChoice,
    /// Coherent displacement amplitude added to the squeezed state (requires --r).
    #[arg(long, default_value_t = 0.0, requires = "r")]
    pub alpha_displacement: f64,
    /// Number of copies for the Heisenberg bound.
    #[arg(long, default_value_t = 1)]
    pub copies: u64,
}

#[derive(Debug, Args)]
pub struct FisherMapArgs {
    #[arg(long)]
    pub r: f64,
    /// Ancilla squeezing range as MIN,MAX.
    #[arg(long, value_delimiter = ',', default_values_t = [-4.0, 1.0], allow_hyphen_values = true)]
    pub rprime_range: Vec<f64>,
    #[arg(long, default_value_t = 11)]
    pub rprime_steps: usize,
    /// Points in φ over [0, π].
    #[arg(long, default_value_t = 13)]
    pub phi_steps: usize,
    /// Write the CSV grid here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(id = "signal", required = true, multiple = false)]
pub struct ThresholdArgs {
    /// Signal squeezing as s = e^-r.
    #[arg(long, group = "signal")]
    pub s: Option<f64>,
    #[arg(long, group = "signal")]
    pub r: Option<f64>,
}

#[derive(Debug, Args)]
pub struct OptimalAngleArgs {
    #[arg(long)]
    pub r: f64,
    /// Ancilla squeezing r'.
    #[arg(long)]
    pub rprime: f64,
}

#[derive(Debug, Args)]
pub struct OracleCheckArgs {
    #[arg(long)]
    pub r: f64,
    /// Fock truncation dimension.
    #[arg(long, default_value_t = 128)]
    pub dim: usize,
    /// Phase at which the optimality conditions are checked.
    #[arg(long, default_value_t = 0.3)]
    pub theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Povm,
    Homodyne,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    Exact,
    Approximate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LoSideArg {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormatArg {
    Csv,
    Json,
}

/// Experiment settings. A --config file supplies defaults that flags override.
#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// JSON file with the experiment configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed (required unless the config file provides one).
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub r: Option<f64>,
    /// True phase.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Total copy budget N.
    #[arg(long)]
    pub copies: Option<u64>,
    /// α in the first-step budget ⌈N^α⌉.
    #[arg(long)]
    pub split_exponent: Option<f64>,
    #[arg(long)]
    pub trials: Option<u64>,
    /// Fock truncation dimension for the POVM scheme.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Per-trial output file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub output_format: Option<OutputFormatArg>,
    /// Second-step estimator of the POVM scheme.
    #[arg(long, value_enum)]
    pub estimator: Option<EstimatorArg>,
    /// Local-oscillator side of the homodyne scheme.
    #[arg(long, value_enum)]
    pub lo_side: Option<LoSideArg>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(value_enum)]
    pub scheme: SchemeArg,
    #[command(flatten)]
    pub experiment: ExperimentArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(value_enum)]
    pub scheme: SchemeArg,
    /// Ascending copy numbers, comma separated.
    #[arg(long = "copies-list", value_delimiter = ',', required = true)]
    pub copies_list: Vec<u64>,
    #[command(flatten)]
    pub experiment: ExperimentArgs,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match commands::run(&cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(CliError::Tolerance { output, reason }) => {
            print!("{output}");
            eprintln!("error: {reason}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

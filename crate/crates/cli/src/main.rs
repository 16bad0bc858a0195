//! `unbalance-lab`: voltage-unbalance indices, their bounds, and feeder
//! scenario studies from the command line.
//!
//! Exit codes: 0 ok, 2 input/parse error, 3 metric error, 4 empty VUF band,
//! 5 power-flow failure.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use output::Format;
use unbalance_core::scenario::BusSelection;

pub const THREADS_ENV: &str = "UNBALANCE_LAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "unbalance-lab", version, about = "Voltage unbalance indices, bounds and LV feeder studies")]
struct Cli {
    #[command(flatten)]
    out: OutputArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,

    /// Decimal places in table and CSV output. JSON is always full precision.
    #[arg(long, global = true, default_value_t = 3, value_parser = clap::value_parser!(u8).range(0..=12))]
    pub precision: u8,

    /// Write the report here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    /// Print solver diagnostics to stderr.
    #[arg(long, short, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate all five indices for one phasor triple.
    Metrics(MetricsArgs),
    /// Bounds of each index relative to VUF over a voltage envelope.
    Bounds(BoundsArgs),
    /// Solve one scenario on a feeder and report the representative buses.
    Run(RunArgs),
    /// Run every scenario of a study manifest with and without PV.
    Study(StudyArgs),
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Phase magnitudes a,b,c (any consistent unit).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, conflicts_with = "file")]
    pub mags: Option<Vec<f64>>,

    /// Phase angles a,b,c in degrees.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_values_t = [0.0, -120.0, 120.0])]
    pub angles: Vec<f64>,

    /// JSON phasor triple `{"a": {"magnitude": .., "angle_deg": ..}, "b": .., "c": ..}`.
    #[arg(long)]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    /// VUF band in percent; repeat for several bands.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], action = clap::ArgAction::Append)]
    pub band: Vec<f64>,

    #[arg(long, default_value_t = 0.94)]
    pub mag_lo: f64,

    #[arg(long, default_value_t = 1.10)]
    pub mag_hi: f64,

    /// Maximum deviation of phases b and c from their nominal angles, degrees.
    #[arg(long, default_value_t = 5.0)]
    pub angle_dev: f64,

    /// Grid points per dimension.
    #[arg(long, default_value_t = unbalance_core::bounds::DEFAULT_RESOLUTION)]
    pub resolution: usize,

    /// Polish grid extrema with a local pattern search.
    #[arg(long)]
    pub refine: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Directory with the feeder's delimited text files.
    #[arg(long)]
    pub feeder: PathBuf,

    /// Scenario JSON file.
    #[arg(long)]
    pub scenario: PathBuf,

    /// PV fleet JSON file.
    #[arg(long)]
    pub pv: Option<PathBuf>,

    #[arg(long, default_value = "representative")]
    pub buses: BusSelection,

    /// Solve with and without the PV fleet and report the change.
    #[arg(long, requires = "pv")]
    pub compare_pv: bool,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    /// Study manifest naming the feeder and scenario/PV files.
    #[arg(long, default_value = "data/scenarios/study.json")]
    pub manifest: PathBuf,

    #[arg(long, default_value = "representative")]
    pub buses: BusSelection,
}

fn configure_threads() -> Result<(), commands::CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| commands::CliError::Input(format!("{THREADS_ENV}='{raw}' is not a thread count")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| commands::CliError::Input(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Metrics(a) => commands::metrics(a, &cli.out),
        Command::Bounds(a) => commands::bounds(a, &cli.out),
        Command::Run(a) => commands::run(a, &cli.out),
        Command::Study(a) => commands::study(a, &cli.out),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

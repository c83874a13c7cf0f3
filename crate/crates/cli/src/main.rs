//! `neurosim`: command-line front end for the simulator.

mod commands;
mod table1;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use neurosim::Error;

#[derive(Parser)]
#[command(
    name = "neurosim",
    version,
    about = "Energy-per-spike simulation of CMOS and CMOS-NEMS neuromorphic cells"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
pub struct Common {
    /// Experiment config file
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory; results go to stdout when neither this nor [output] dir is set
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for independent operating points
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one transient simulation and write the trace and energy ledger
    Sim {
        #[command(flatten)]
        common: Common,
        /// Preset to layer the config over (default: the template's calibrated preset)
        #[arg(long)]
        preset: Option<String>,
    },
    /// Tune both neuron variants to each target rate and compare energy per spike
    EnergyVsRate {
        #[command(flatten)]
        common: Common,
        /// Presets for the two variants, matched by template
        #[arg(long, value_delimiter = ',')]
        preset: Vec<String>,
        /// Target rates, comma separated (default 10,30,100,250 Hz)
        #[arg(long)]
        rates: Option<String>,
    },
    /// Energy per spike of both neuron variants over a sweep of injection current
    EfficiencyCurve {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        preset: Vec<String>,
        #[arg(long, default_value = "50 pA")]
        from: String,
        #[arg(long, default_value = "500 pA")]
        to: String,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        /// linear or log
        #[arg(long, default_value = "linear")]
        scale: String,
    },
    /// Relay lifetime at one switching cycle per spike
    Lifetime {
        #[command(flatten)]
        common: Common,
        /// Spike rate
        #[arg(long, default_value = "10 Hz")]
        rate: String,
        /// Rated relay switching cycles
        #[arg(long, default_value = "1e10")]
        cycles: String,
        /// Required service life in seconds; exit 4 if the relay wears out first
        #[arg(long)]
        mission: Option<String>,
    },
    /// Comparison table: fresh simulated rows plus literature rows
    Table1 {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        preset: Vec<String>,
        /// csv or markdown
        #[arg(long)]
        format: Option<String>,
        /// Literature data file (default: the bundled one)
        #[arg(long)]
        literature: Option<PathBuf>,
    },
    /// Check a config and the circuit it builds without simulating
    Validate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        preset: Option<String>,
    },
}

/// A failed command with its process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::InvalidArgument(_)
        | Error::UnknownTemplate(_)
        | Error::Validation(_)
        | Error::Io(_) => 2,
        Error::Stiffness { .. } | Error::InsufficientData(_) => 3,
        Error::LifetimeExceeded { .. } => 4,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e).into()
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Self::usage(format!("csv: {e}"))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Sim { common, preset } => commands::sim(&common, preset),
        Command::EnergyVsRate {
            common,
            preset,
            rates,
        } => commands::energy_vs_rate(&common, &preset, rates.as_deref()),
        Command::EfficiencyCurve {
            common,
            preset,
            from,
            to,
            steps,
            scale,
        } => commands::efficiency_curve(&common, &preset, &from, &to, steps, &scale),
        Command::Lifetime {
            common,
            rate,
            cycles,
            mission,
        } => commands::lifetime(&common, &rate, &cycles, mission.as_deref()),
        Command::Table1 {
            common,
            preset,
            format,
            literature,
        } => table1::run(&common, &preset, format.as_deref(), literature.as_deref()),
        Command::Validate { common, preset } => commands::validate(&common, preset),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

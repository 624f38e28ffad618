use std::num::NonZeroUsize;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use memsact_cli::commands::{self, Loaded, SimulateOptions, SweepOptions};
use memsact_cli::error::CliError;

#[derive(Parser)]
#[command(
    name = "memsact",
    version,
    about = "Electrostatic micro-actuator simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario configuration (TOML).
    #[arg(long)]
    config: PathBuf,

    /// Override a configuration key, e.g. `--set controller.k1=20`.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Ideal, Palmer, substitute and serial capacitance over a gap sweep.
    CapSweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
        /// Smallest gap (m); defaults to a thousandth of the initial gap.
        #[arg(long)]
        gap_min: Option<f64>,
        /// Largest gap (m); defaults to the initial gap.
        #[arg(long)]
        gap_max: Option<f64>,
        #[arg(long, default_value_t = memsact::capmodel::SWEEP_POINTS)]
        points: usize,
    },
    /// Closed-loop set-point runs.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Trace file, or directory for several set-points.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, conflicts_with = "setpoints")]
        setpoint: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        setpoints: Vec<f64>,
        /// Worker threads for set-point lists.
        #[arg(long, default_value = "1")]
        jobs: NonZeroUsize,
    },
    /// Static pull-in without and with the serial parasitic.
    Pullin {
        #[command(flatten)]
        common: Common,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::CapSweep {
            common,
            out,
            gap_min,
            gap_max,
            points,
        } => {
            let cfg = Loaded::read(&common.config, &common.overrides)?;
            let opts = SweepOptions {
                gap_min_m: gap_min,
                gap_max_m: gap_max,
                points,
            };
            commands::cap_sweep(&cfg, &opts, &out)
        }
        Command::Simulate {
            common,
            out,
            setpoint,
            setpoints,
            jobs,
        } => {
            let cfg = Loaded::read(&common.config, &common.overrides)?;
            let set_points = if setpoints.is_empty() {
                cfg.config.set_point(setpoint).into_iter().collect()
            } else {
                setpoints
            };
            commands::simulate(&cfg, &SimulateOptions { set_points, jobs }, &out)
        }
        Command::Pullin { common } => {
            let cfg = Loaded::read(&common.config, &common.overrides)?;
            commands::pullin(&cfg)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

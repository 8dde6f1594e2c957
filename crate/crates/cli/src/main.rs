//! `apcc` command-line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod formats;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Estimation(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Estimation(_) => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "apcc", version, about = "Continuum segment kinematics, calibration and tip-camera configuration estimation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: GlobalOpts,
}

/// Options shared by all subcommands. Angles are in degrees.
#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Master seed (default 0, or the scenario file's seed).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads, 0 for one per core. Never changes results.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// RANSAC inlier threshold on the angular residual (rad).
    #[arg(long, global = true)]
    pub tau: Option<f64>,
    /// Ignore the tip-angle correction during estimation.
    #[arg(long, global = true)]
    pub no_delta: bool,
    /// Segment length (m).
    #[arg(long = "length", global = true)]
    pub length: Option<f64>,
    /// Deviation coefficient.
    #[arg(long, global = true)]
    pub k: Option<f64>,
    #[arg(long, global = true)]
    pub delta_max_deg: Option<f64>,
    #[arg(long, global = true)]
    pub theta_max_deg: Option<f64>,
    /// Focal length (px).
    #[arg(long, global = true)]
    pub focal: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ideal-arc and linkage tips over a deflection grid.
    Fk(GridOpts),
    /// Tip-trajectory errors of the ideal arc and a calibrated linkage
    /// against a ground-truth linkage.
    Trajectory(TrajectoryOpts),
    /// Calibrate k and delta_max from tip measurements (JSON).
    Calibrate {
        input: PathBuf,
    },
    /// Monte Carlo noise experiment or chained sweep from a scenario file.
    Simulate(SimulateOpts),
    /// Estimate second-view deflections from a correspondence file (JSON).
    Estimate(EstimateOpts),
    /// Compare the polynomial solver with the grid-scan oracle.
    SolveBench(BenchOpts),
}

#[derive(Debug, Clone, Args)]
pub struct GridOpts {
    /// File with one deflection (deg) per line; overrides the range options.
    #[arg(long)]
    pub grid_file: Option<PathBuf>,
    #[arg(long, default_value_t = -60.0, allow_negative_numbers = true)]
    pub from_deg: f64,
    #[arg(long, default_value_t = 60.0, allow_negative_numbers = true)]
    pub to_deg: f64,
    #[arg(long, default_value_t = 1.0)]
    pub step_deg: f64,
}

#[derive(Debug, Clone, Args)]
pub struct TrajectoryOpts {
    #[command(flatten)]
    pub grid: GridOpts,
    /// Ground-truth deviation coefficient (defaults to the model's k).
    #[arg(long)]
    pub actual_k: Option<f64>,
    /// Ground-truth tip-angle deviation (defaults to the model's).
    #[arg(long)]
    pub actual_delta_max_deg: Option<f64>,
    /// Write the summary JSON here instead of standard error.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateOpts {
    /// Scenario JSON; built-in defaults when omitted.
    pub scenario: Option<PathBuf>,
    /// Run the chained sweep instead of the noise experiment.
    #[arg(long)]
    pub sequence: bool,
    /// Override the scenario's trial count.
    #[arg(long)]
    pub trials: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateOpts {
    pub input: PathBuf,
    /// Solve every view pair with its own theta_prev instead of chaining.
    #[arg(long)]
    pub independent: bool,
}

#[derive(Debug, Clone, Args)]
pub struct BenchOpts {
    /// Problems per (k, root mode) cell.
    #[arg(long, default_value_t = 200)]
    pub problems: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("apcc: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod config;
mod error;
mod output;

use error::CliError;
use output::{Format, Output};

const THREADS_ENV: &str = "GRANULAR_SLOPE_THREADS";

/// Stride-model toolkit for C-legged robots on granular slopes.
#[derive(Debug, Parser)]
#[command(name = "granular-slope", version)]
struct Cli {
    /// Run configuration (JSON).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Suppress diagnostics on stderr. Warnings are still printed.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Robot config JSON; overrides the run config.
    #[arg(long, value_name = "PATH")]
    pub robot: Option<PathBuf>,
    /// Terrain strength JSON (as written by `calibrate`).
    #[arg(long, value_name = "PATH")]
    pub terrain: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScaleArg {
    Linear,
    Log,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit terrain strength from penetration and shear measurements.
    Calibrate {
        /// Penetration CSV (repeatable).
        #[arg(long, value_name = "CSV")]
        penetration: Vec<PathBuf>,
        /// Shear CSV, one per slope angle (repeatable).
        #[arg(long, value_name = "CSV")]
        shear: Vec<PathBuf>,
    },
    /// Evaluate one stride at each slope angle.
    #[command(allow_negative_numbers = true)]
    Stride {
        #[command(flatten)]
        model: ModelArgs,
        /// Slope angle in degrees (repeatable or comma separated).
        #[arg(long, value_name = "DEG", value_delimiter = ',')]
        theta: Vec<f64>,
    },
    /// Regime map over (k_n, k_s) at a fixed slope.
    #[command(allow_negative_numbers = true)]
    Sweep {
        #[arg(long, value_name = "PATH")]
        robot: Option<PathBuf>,
        #[arg(long, value_name = "DEG")]
        theta: Option<f64>,
        #[arg(long, value_name = "N_PER_M3")]
        kn_min: Option<f64>,
        #[arg(long, value_name = "N_PER_M3")]
        kn_max: Option<f64>,
        #[arg(long, value_name = "N_PER_M3")]
        ks_min: Option<f64>,
        #[arg(long, value_name = "N_PER_M3")]
        ks_max: Option<f64>,
        /// Samples on each axis.
        #[arg(long, value_name = "N")]
        grid: Option<usize>,
        #[arg(long, value_enum)]
        scale: Option<ScaleArg>,
    },
    /// Minimum-risk path over a heightmap.
    #[command(allow_negative_numbers = true)]
    Plan {
        #[command(flatten)]
        model: ModelArgs,
        /// ASCII heightmap: `ncols nrows cell_size_m`, then rows north first.
        #[arg(long, value_name = "PATH")]
        heightmap: Option<PathBuf>,
        /// Start cell as `col,row`.
        #[arg(long, value_name = "COL,ROW")]
        start: Option<String>,
        /// Goal cell as `col,row`.
        #[arg(long, value_name = "COL,ROW")]
        goal: Option<String>,
        /// Weight on metastable risk.
        #[arg(long)]
        lambda: Option<f64>,
        /// Also write the per-cell risk map CSV.
        #[arg(long, value_name = "PATH")]
        risk_map: Option<PathBuf>,
    },
    /// Body speed over one step.
    #[command(allow_negative_numbers = true)]
    Trace {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_name = "DEG")]
        theta: Option<f64>,
        /// Sample spacing in seconds.
        #[arg(long, value_name = "S")]
        dt: Option<f64>,
    },
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| {
        CliError::input(format!(
            "{THREADS_ENV} must be a non-negative integer, got `{raw}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::input(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let cfg = config::load(cli.config.as_deref())?;
    let out = Output::new(cli.out, cli.format, cli.quiet);
    match cli.command {
        Command::Calibrate { penetration, shear } => {
            commands::calibrate(&cfg, &out, penetration, shear)
        }
        Command::Stride { model, theta } => commands::stride(&cfg, &out, &model, theta),
        Command::Sweep {
            robot,
            theta,
            kn_min,
            kn_max,
            ks_min,
            ks_max,
            grid,
            scale,
        } => commands::sweep(
            &cfg,
            &out,
            commands::SweepArgs {
                robot,
                theta,
                kn: (kn_min, kn_max),
                ks: (ks_min, ks_max),
                grid,
                scale,
            },
        ),
        Command::Plan {
            model,
            heightmap,
            start,
            goal,
            lambda,
            risk_map,
        } => commands::plan(
            &cfg,
            &out,
            &model,
            commands::PlanArgs {
                heightmap,
                start,
                goal,
                lambda,
                risk_map,
            },
        ),
        Command::Trace { model, theta, dt } => commands::trace(&cfg, &out, &model, theta, dt),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

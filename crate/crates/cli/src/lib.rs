//! `oldb`: command-line surface of the Oldroyd-B decay toolkit.

mod commands;
pub mod config;
pub mod error;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::Mode;
use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "oldb", version, about = "Decay rates of the Oldroyd-B system: linear curves, solver runs, fits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate the decay character of the configured initial data.
    DecayCharacter {
        #[arg(long)]
        config: PathBuf,
        /// Drift tolerance of the lattice estimator (random_band data).
        #[arg(long, default_value_t = 0.5)]
        lattice_tolerance: f64,
    },
    /// Continuum linear decay curves and their fitted exponents.
    Linear {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the nonlinear solver and write the diagnostic series.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Continue from a checkpoint instead of the configured data.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Compare fitted log-log slopes of a series with the predicted exponents.
    Fit {
        #[arg(long)]
        series: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Report path (default `<output.dir>/report.json`).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Scan the pointwise kernel bounds on `(0, R] × [0, t_max]`.
    VerifyBounds {
        #[arg(long)]
        omega: f64,
        #[arg(long)]
        radius: f64,
        #[arg(long, default_value_t = 200)]
        n_xi: usize,
        #[arg(long, default_value_t = 200)]
        n_t: usize,
        #[arg(long, default_value_t = 100.0)]
        t_max: f64,
        /// Write the full report as JSON.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Log-log SVG of series columns, with predicted slope guides.
    Plot {
        #[arg(long)]
        series: PathBuf,
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        columns: Vec<String>,
        #[arg(long, requires = "r_tau")]
        r_u: Option<f64>,
        #[arg(long, requires = "r_u")]
        r_tau: Option<f64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("OLDB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Invalid(format!("OLDB_THREADS must be a nonnegative integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))
}

fn dispatch(cmd: Command) -> CliResult<Vec<String>> {
    match cmd {
        Command::DecayCharacter { config, lattice_tolerance } => {
            commands::decay_character(&commands::load_config(&config, Mode::DecayCharacter)?, lattice_tolerance)
        }
        Command::Linear { config } => commands::linear(&commands::load_config(&config, Mode::Linear)?),
        Command::Simulate { config, resume } => {
            commands::simulate(&commands::load_config(&config, Mode::Simulate)?, resume.as_deref())
        }
        Command::Fit { series, config, output } => {
            commands::fit(&commands::load_config(&config, Mode::Fit)?, &series, output.as_deref())
        }
        Command::VerifyBounds { omega, radius, n_xi, n_t, t_max, output } => {
            commands::verify_bounds(omega, radius, n_xi, n_t, t_max, output.as_deref())
        }
        Command::Plot { series, columns, r_u, r_tau, output } => {
            commands::plot(&series, &columns, r_u.zip(r_tau), output.as_deref())
        }
    }
}

/// Run one invocation and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("error")).try_init();
    let result = match Cli::try_parse_from(args) {
        Ok(cli) => configure_threads().and_then(|()| dispatch(cli.command)),
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return 0;
        }
        Err(e) => Err(CliError::Usage(e.render().to_string())),
    };
    match result {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            0
        }
        Err(e) => {
            for l in e.lines() {
                eprintln!("{l}");
            }
            e.code()
        }
    }
}

//! Experiment runner for the `maxitive` crate.
//!
//! Every subcommand produces its whole output in memory and returns it with
//! an exit status, so the binary is a thin wrapper and tests can run
//! commands in-process.

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub mod commands;
pub mod grid;
pub mod suite;
pub mod table;

/// Exit status for success and for classifications that are not failures.
pub const EXIT_OK: i32 = 0;
/// Some checked invariant was violated; the report carries a witness.
pub const EXIT_VIOLATION: i32 = 1;
/// Bad configuration or input.
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser, Clone)]
#[command(name = "maxitive", version, about = "Maxitive integrals and monotone large deviations")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct GlobalOpts {
    /// Root seed; required by every stochastic path.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Tolerance override for the pass/fail checks of a subcommand.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Worker threads; 0 lets the pool decide.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand, Clone)]
pub enum Command {
    /// Random finite preorders and concentrations through the property suite.
    Finite(suite::FiniteArgs),
    /// Exact and simulated tails of sample means against the monotone rate.
    Cramer(commands::CramerArgs),
    /// Trace of (1/n) log mu_n along a schedule.
    Asym(commands::AsymArgs),
    /// Nonnegative-cone Fenchel conjugate of a rate given as CSV.
    Conjugate(commands::ConjugateArgs),
    /// Classifies a concentration read from JSON.
    Check(commands::CheckArgs),
}

/// Result of one run: exit status and the bytes destined for the output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub status: i32,
    pub output: Vec<u8>,
}

/// Configuration or input error; maps to [`EXIT_CONFIG`].
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] maxitive::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub(crate) fn config<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Config(msg.into()))
}

pub(crate) fn read_file(path: &PathBuf) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub(crate) fn require_seed(global: &GlobalOpts, what: &str) -> CliResult<u64> {
    global
        .seed
        .ok_or_else(|| CliError::Config(format!("{what} is stochastic and needs --seed")))
}

/// Runs a parsed command on a dedicated thread pool. Errors become
/// [`EXIT_CONFIG`] with the message as output.
pub fn run(cli: &Cli) -> Outcome {
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.global.threads).build() {
        Ok(p) => p,
        Err(e) => return config_failure(&CliError::Config(e.to_string())),
    };
    let result = pool.install(|| match &cli.command {
        Command::Finite(a) => suite::run_finite(&cli.global, a),
        Command::Cramer(a) => commands::run_cramer(&cli.global, a),
        Command::Asym(a) => commands::run_asym(&cli.global, a),
        Command::Conjugate(a) => commands::run_conjugate(&cli.global, a),
        Command::Check(a) => commands::run_check(&cli.global, a),
    });
    match result {
        Ok(o) => o,
        Err(e) => config_failure(&e),
    }
}

fn config_failure(e: &CliError) -> Outcome {
    Outcome {
        status: EXIT_CONFIG,
        output: format!("error: {e}\n").into_bytes(),
    }
}

/// Parses `args` (program name first) and runs; clap errors map to
/// [`EXIT_CONFIG`] except for help and version.
pub fn run_from_args<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let status = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            Outcome {
                status,
                output: e.render().to_string().into_bytes(),
            }
        }
    }
}

pub(crate) fn json_bytes<T: serde::Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s.into_bytes()
}

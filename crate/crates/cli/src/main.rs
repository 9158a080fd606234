//! `impulse-dividend`: classify, solve, verify and simulate lump-sum dividend
//! problems from a JSON model file.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use impulse_dividend::Error;

#[derive(Parser, Debug)]
#[command(name = "impulse-dividend", version, about = "Optimal lump-sum dividend policies under transaction costs")]
pub struct Cli {
    /// Worker threads for the parallel parts.
    #[arg(long, global = true, env = "IMPULSE_DIVIDEND_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Model file (JSON).
    #[arg(long)]
    pub model: PathBuf,
    /// Local error tolerance of the basis integration.
    #[arg(long, default_value_t = impulse_dividend::basis::DEFAULT_TOL)]
    pub tol: f64,
    /// Truncation point of the state space, overriding the model file.
    #[arg(long)]
    pub x_max: Option<f64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Landmarks, critical constants and the case label.
    Classify {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Value function and policy.
    Solve {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write `x,V,V'` samples to this CSV file.
        #[arg(long)]
        emit_v: Option<PathBuf>,
        /// Number of samples for `--emit-v`.
        #[arg(long, default_value_t = 1000)]
        grid: usize,
    },
    /// QVI check of a solution, plus the basis identities.
    Verify {
        #[command(flatten)]
        model: ModelArgs,
        /// Solution file written by `solve`; solved afresh when absent.
        #[arg(long)]
        solution: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = impulse_dividend::verify::DEFAULT_GRID)]
        grid: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Monte Carlo value of the optimal (or a near-optimal) policy.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        solution: Option<PathBuf>,
        /// Initial surpluses, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        x0: Vec<f64>,
        #[arg(long, default_value_t = 10_000)]
        paths: usize,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        /// Defaults to `100 / lambda`.
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        antithetic: bool,
        /// Pay everything at this level where no optimal policy exists.
        #[arg(long)]
        u_bar: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Beta-dependent diagnostics as CSV.
    Curves {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 200)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Grid dynamic-programming value as CSV.
    Oracle {
        #[command(flatten)]
        model: ModelArgs,
        /// Number of grid cells.
        #[arg(long, default_value_t = 4000)]
        grid: usize,
        /// Right end of the grid; by default past the last knot of the solution.
        #[arg(long)]
        dp_x_max: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Node table of the basis solutions as CSV.
    DumpBasis {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-form checks on the zero-drift model.
    Selftest,
}

/// Failure of a subcommand, mapped to the exit code.
#[derive(Debug)]
pub enum Failure {
    Verification(String),
    Unsupported(String),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::VerificationFailure(_) | Error::IdentityFailure(_) => Failure::Verification(e.to_string()),
            Error::UnsupportedCase(_) => Failure::Unsupported(e.to_string()),
            _ => Failure::Other(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Other(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Other(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Other(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(m)) => {
            eprintln!("verification failed: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Unsupported(m)) => {
            eprintln!("{m}");
            ExitCode::from(3)
        }
        Err(Failure::Other(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

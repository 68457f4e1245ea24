//! Command-line front end: `check`, `solve`, `verify`, `demo`.
//!
//! Exit codes: 0 when every check passes, 1 when a check or verification
//! fails (or a computation hits a domain error), 2 for configuration errors.

pub mod commands;
pub mod config;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use crate::error::Error;
pub use config::{Context, RunConfig};
pub use report::{Report, Status};

#[derive(Debug, Parser)]
#[command(name = "qgevrey", version, about = "q-Laplace chart solutions, flatness and q-Gevrey asymptotics")]
pub struct Cli {
    /// JSON run configuration; the built-in demo when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for the JSON report and CSV datasets.
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Runs `solve` and `verify` even when `check` fails.
    #[arg(long, global = true)]
    pub force: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Assumptions, covering, associated family and admissibility.
    Check,
    /// Evaluates one chart solution.
    Solve {
        #[arg(long)]
        chart: usize,
        /// `re,im`
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        eps: Complex64,
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        t: Complex64,
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        z: Complex64,
    },
    /// Numerical verification with CSV datasets.
    Verify {
        #[arg(value_enum)]
        which: Which,
    },
    /// Writes the demo configuration, then runs `check` and every verification.
    Demo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Which {
    Residual,
    Flatness,
    Asympt,
    Properties,
}

pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |p: &str| p.parse::<f64>().map_err(|_| format!("{p:?} is not a number"));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(format!("expected `re,im`, got {s:?}")),
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match commands::dispatch(&cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(Error::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

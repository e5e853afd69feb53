// SPDX-License-Identifier: Apache-2.0

//! `dirac-spectral <command> --config cfg.json`
//!
//! Exit codes: 0 success, 2 input error, 3 numerical guard failure.

// `!(a <= b)` is used on purpose so that NaN lands in the failure branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use crate::config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// E_N on the real axis, Weyl function samples, det T check.
    Forward,
    /// Eigenvalues and weights in a window.
    Spectrum,
    /// Gelfand-Levitan function from a measure (or from an E_N grid CSV).
    Gl,
    /// Positivity test of a GL function.
    CheckPhi,
    /// Canonical system and Dirac density from a GL function.
    Inverse,
    /// Dirac measure to canonical system or back.
    Convert,
    /// Forward, GL, inverse and back, across a refinement ladder.
    Roundtrip,
    /// Iterated-integral series against the ODE solver.
    SeriesCheck,
}

#[derive(Debug, Parser)]
#[command(name = "dirac-spectral", version, about = "Forward and inverse spectral computations for Dirac operators")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    #[arg(long)]
    config: PathBuf,
}

/// A failed run: the stage that stopped and the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub stage: &'static str,
    pub message: String,
}

impl Failure {
    pub fn input(stage: &'static str, message: impl Into<String>) -> Self {
        Self { code: 2, stage, message: message.into() }
    }

    pub fn numerical(stage: &'static str, message: impl Into<String>) -> Self {
        Self { code: 3, stage, message: message.into() }
    }

    pub fn from_core(stage: &'static str, e: dirac_spectral::Error) -> Self {
        Self { code: if e.is_input_error() { 2 } else { 3 }, stage, message: e.to_string() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.stage, self.message)
    }
}

/// Caps rayon's global pool from `DIRAC_SPECTRAL_THREADS`.
fn init_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("DIRAC_SPECTRAL_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::input("env", format!("DIRAC_SPECTRAL_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::input("env", e.to_string()))
}

fn load_config(path: &std::path::Path) -> Result<RunConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::input("config", format!("{}: {e}", path.display())))?;
    let cfg: RunConfig =
        serde_json::from_str(&text).map_err(|e| Failure::input("config", format!("{}: {e}", path.display())))?;
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    init_threads()?;
    let cfg = load_config(&cli.config)?;
    std::fs::create_dir_all(&cfg.output)
        .map_err(|e| Failure::input("output", format!("{}: {e}", cfg.output.display())))?;
    commands::dispatch(cli.command, &cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(2);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}

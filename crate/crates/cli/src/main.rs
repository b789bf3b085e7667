//! `timekernel` — series, phase-space, and grid solvers for the time kernel
//! equation, driven by a JSON job configuration.
//!
//! Exit codes: 0 success, 2 invalid input or configuration, 3 iteration did
//! not converge, 4 a mathematical consistency check failed.

mod commands;
mod config;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{load_config, parse_grid_override, OutputFormat, Overrides};

/// Terminal failure carrying the exit code to report.
pub struct Failure {
    pub message: String,
    pub code: i32,
}

impl Failure {
    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            code: 2,
        }
    }
}

impl From<timekernel_core::Error> for Failure {
    fn from(err: timekernel_core::Error) -> Self {
        let code = match &err {
            timekernel_core::Error::NonConvergence { .. } => 3,
            timekernel_core::Error::ConsistencyFailure(_) => 4,
            _ => 2,
        };
        Self {
            message: err.to_string(),
            code,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "timekernel",
    version,
    about = "Exact series and numerical solvers for the time kernel equation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON job configuration; defaults apply when omitted.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Output format (overrides the config's "format").
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,

    /// Write the payload to this file instead of stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,

    /// Truncation order (overrides the config's "order").
    #[arg(long)]
    order: Option<u32>,

    /// Iteration tolerance (overrides the config's "tolerance").
    #[arg(long)]
    tol: Option<f64>,

    /// Grid size as NxM (overrides the config's grid point counts).
    #[arg(long, value_name = "NxM")]
    grid: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the equation as an exact truncated double series.
    SolveTke(CommonArgs),
    /// Report conjugacy and symmetry classifications of a solution.
    Check(CommonArgs),
    /// Phase-space image of the full kernel built from a solution.
    Weyl(CommonArgs),
    /// Local expansion of the classical arrival time.
    ClassicalToa(CommonArgs),
    /// Expansion of an inverse power of the Hamiltonian.
    InverseH(CommonArgs),
    /// Iterative grid solve with an exact cross-check where available.
    Picard(CommonArgs),
    /// Closed-form solution of the modified (distributional) equation.
    Mtke(CommonArgs),
    /// Table of composite expansion coefficients for the potential.
    CTable(CommonArgs),
    /// Verify the power identity tying the table to potential powers.
    IdentityCheck(CommonArgs),
    /// Sample the phase-space image on a lattice for plotting.
    PlotData(CommonArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::SolveTke(_) => "solve-tke",
            Command::Check(_) => "check",
            Command::Weyl(_) => "weyl",
            Command::ClassicalToa(_) => "classical-toa",
            Command::InverseH(_) => "inverse-h",
            Command::Picard(_) => "picard",
            Command::Mtke(_) => "mtke",
            Command::CTable(_) => "c-table",
            Command::IdentityCheck(_) => "identity-check",
            Command::PlotData(_) => "plot-data",
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Command::SolveTke(a)
            | Command::Check(a)
            | Command::Weyl(a)
            | Command::ClassicalToa(a)
            | Command::InverseH(a)
            | Command::Picard(a)
            | Command::Mtke(a)
            | Command::CTable(a)
            | Command::IdentityCheck(a)
            | Command::PlotData(a) => a,
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("TIMEKERNEL_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().map_err(|_| {
        Failure::validation(format!(
            "TIMEKERNEL_THREADS must be a positive integer, got {raw:?}"
        ))
    })?;
    if threads == 0 {
        return Err(Failure::validation(
            "TIMEKERNEL_THREADS must be a positive integer, got \"0\"",
        ));
    }
    // A second build_global in the same process is harmless; keep the first.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    Ok(())
}

fn run(cli: &Cli) -> Result<commands::Outcome, Failure> {
    configure_threads()?;
    let args = cli.command.args();
    let grid_override = args
        .grid
        .as_deref()
        .map(parse_grid_override)
        .transpose()?;
    let overrides = Overrides {
        order: args.order,
        tol: args.tol,
        grid: grid_override,
        format: args.format,
    };
    let raw = load_config(args.config.as_deref())?;
    let job = raw.resolve(cli.command.name(), &overrides)?;
    match cli.command {
        Command::SolveTke(_) => commands::solve_tke_cmd(&job),
        Command::Check(_) => commands::check_cmd(&job),
        Command::Weyl(_) => commands::weyl_cmd(&job),
        Command::ClassicalToa(_) => commands::classical_toa_cmd(&job),
        Command::InverseH(_) => commands::inverse_h_cmd(&job),
        Command::Picard(_) => commands::picard_cmd(&job),
        Command::Mtke(_) => commands::mtke_cmd(&job),
        Command::CTable(_) => commands::c_table_cmd(&job),
        Command::IdentityCheck(_) => commands::identity_check_cmd(&job),
        Command::PlotData(_) => commands::plot_data_cmd(&job),
    }
}

fn emit(payload: &str, out: Option<&PathBuf>) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, payload).map_err(|err| {
            Failure::validation(format!("cannot write {}: {err}", path.display()))
        }),
        None => {
            let stdout = std::io::stdout();
            let mut handle = stdout.lock();
            handle
                .write_all(payload.as_bytes())
                .and_then(|()| handle.flush())
                .map_err(|err| Failure::validation(format!("cannot write output: {err}")))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = cli.command.args().out.clone();
    match run(&cli) {
        Ok(outcome) => {
            if let Err(failure) = emit(&outcome.payload, out.as_ref()) {
                eprintln!("error: {}", failure.message);
                return ExitCode::from(failure.code as u8);
            }
            ExitCode::from(outcome.code as u8)
        }
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code as u8)
        }
    }
}

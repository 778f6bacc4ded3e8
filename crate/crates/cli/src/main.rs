//! `subdyadic` command-line front end.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid input or configuration,
//! 3 an iterative method did not converge.

mod commands;
mod config;
mod error;
mod report;

use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Ctx;
use config::{Overrides, RunConfig};
use error::Result;

#[derive(Debug, Parser)]
#[command(name = "subdyadic", version, about = "Subdyadic phase-space lattices, frames, multipliers and wavefront scans")]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the lattice and report covering, overlap and separation.
    BuildLattice {
        /// Geometry-only lattice covering every corona up to Nyquist.
        #[arg(long)]
        geometry_only: bool,
    },
    /// Frame bounds, Gram decay, Schur constant and dual reconstruction.
    FrameReport(commands::FrameArgs),
    /// Gram decay profiles, subblock inversion and the cross-Gramian.
    GramDecay(commands::GramArgs),
    /// Modulation norm of a signal's coefficients.
    Modnorm(commands::ModNormArgs),
    /// Apply a multiplier and run the boundedness experiments.
    Multiplier(commands::MultiplierArgs),
    /// Pointwise and averaged derivative conditions of a symbol.
    MiyachiCheck(commands::MiyachiArgs),
    /// Wavefront-set indicator of a signal.
    Wavefront(commands::WavefrontArgs),
    /// Wavefront sets before and after a pseudodifferential operator.
    PsidoInvariance(commands::PsiDoArgs),
    /// Write a generated signal with its sidecar.
    GenSignal(commands::GenArgs),
}

fn run(cli: Cli) -> Result<()> {
    let cfg = RunConfig::resolve(&cli.overrides)?;
    let mut ctx = Ctx::new(cfg);
    let summary = match &cli.command {
        Command::BuildLattice { geometry_only } => commands::build_lattice(&mut ctx, *geometry_only)?,
        Command::FrameReport(a) => commands::frame_report(&mut ctx, a)?,
        Command::GramDecay(a) => commands::gram_decay(&mut ctx, a)?,
        Command::Modnorm(a) => commands::modnorm(&mut ctx, a)?,
        Command::Multiplier(a) => commands::multiplier(&mut ctx, a)?,
        Command::MiyachiCheck(a) => commands::miyachi_check(&mut ctx, a)?,
        Command::Wavefront(a) => commands::wavefront(&mut ctx, a)?,
        Command::PsidoInvariance(a) => commands::psido_invariance(&mut ctx, a)?,
        Command::GenSignal(a) => commands::gen_signal(&mut ctx, a)?,
    };
    // a closed stdout (e.g. piped into `head`) is not a failure of the run
    let mut stdout = std::io::stdout().lock();
    let _ = writeln!(stdout, "{summary}");
    for path in ctx.out.written() {
        let _ = writeln!(stdout, "wrote {}", path.display());
    }
    Ok(())
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

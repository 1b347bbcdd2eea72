//! Command-line driver for the thin-ligament waveguide mode converter:
//! asymptotic constants, the design recipe, finite element scattering
//! solves, length-landscape sweeps, and a physical-invariant suite.
//!
//! One JSON configuration file drives every subcommand; flags override
//! individual fields. Exit codes: 0 success, 2 invariant failure,
//! 3 configuration error, 4 solver failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;

use commands::{CmdResult, Ctx, Failure};
use config::{AbcChoice, RunConfig, TargetChoice};

#[derive(Debug, Parser)]
#[command(
    name = "modeconv",
    version,
    about = "Design and verify thin-ligament waveguide mode converters"
)]
struct Cli {
    /// JSON run configuration; built-in defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory, overriding the configured one.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Accept frequencies outside the two-mode band.
    #[arg(long, global = true)]
    override_range: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute and cache the junction and wall Green's constants.
    Constants,
    /// Evaluate the design recipe for the configured frequency and width.
    Design,
    /// Solve the scattering problem; exports matrices, fields, and a report.
    Solve {
        /// Solve one half-domain problem with this symmetry condition.
        #[arg(long, value_enum, value_name = "BC")]
        abc: Option<AbcChoice>,
    },
    /// Map the cost landscape over the two ligament lengths.
    Sweep {
        /// Length grid override, `start:stop:count` per ligament.
        #[arg(long, value_name = "A:B:N,C:D:M")]
        grid: Option<String>,
        /// Reflection targets of the cost function.
        #[arg(long, value_enum, value_name = "CONVENTION")]
        targets: Option<TargetChoice>,
    },
    /// Run the physical-invariant suite and exit nonzero on failure.
    Verify,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code: u8 = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 3,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invariant(message)) => {
            eprintln!("invariant failure: {message}");
            ExitCode::from(2)
        }
        Err(Failure::Core(error)) => {
            eprintln!("error: {error}");
            ExitCode::from(exit_code(&error))
        }
    }
}

fn run(cli: Cli) -> CmdResult {
    let mut config = RunConfig::load(cli.config.as_deref()).map_err(Failure::Core)?;
    if let Some(out) = cli.out {
        config.out_dir = out;
    }
    config.validate(cli.override_range).map_err(Failure::Core)?;
    let out_dir = config.out_dir.clone();
    std::fs::create_dir_all(&out_dir).map_err(|e| {
        Failure::Core(modeconv::Error::Config(format!(
            "cannot create output directory {}: {e}",
            out_dir.display()
        )))
    })?;
    let ctx = Ctx { config, out_dir };
    match cli.command {
        Command::Constants => commands::cmd_constants(&ctx),
        Command::Design => commands::cmd_design(&ctx),
        Command::Solve { abc } => commands::cmd_solve(&ctx, abc),
        Command::Sweep { grid, targets } => commands::cmd_sweep(&ctx, grid.as_deref(), targets),
        Command::Verify => commands::cmd_verify(&ctx),
    }
}

/// Maps library errors onto the documented exit codes: configuration and
/// geometry rejections are 3, solver-stage failures are 4.
fn exit_code(error: &modeconv::Error) -> u8 {
    use modeconv::Error::*;
    match error {
        Config(_)
        | InvalidGeometry(_)
        | LigamentDoesNotFit(_)
        | LigamentTooShort { .. }
        | CutoffWavenumber { .. }
        | NotPropagating { .. }
        | CutoffTooLarge { .. }
        | Json(_) => 3,
        _ => 4,
    }
}

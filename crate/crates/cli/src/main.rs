//! `maser`: command-line front end for the maser-soliton toolkit.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};

mod commands;
mod config;
mod error;
mod output;
mod rundir;

use commands::Global;
use config::ConfigKind;
use output::Format;

#[derive(Debug, Parser)]
#[command(
    name = "maser",
    version,
    about = "Whispering-gallery maser soliton simulator and analysis tools"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Config document (JSON) for the subcommand.
    #[arg(long, global = true, env = "MASER_CONFIG", value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides the noise seed (simulate) or plan seed (sweep).
    #[arg(long, global = true, env = "MASER_SEED", value_name = "N")]
    seed: Option<u64>,
    /// Run directory. Simulations and sweeps default to runs/<command>-<hash>.
    #[arg(long, global = true, env = "MASER_OUT", value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true, env = "MASER_THREADS", value_name = "N",
          value_parser = clap::value_parser!(u32).range(1..))]
    threads: Option<u32>,
    /// Rendering of the result printed on stdout.
    #[arg(long, global = true, env = "MASER_FORMAT", value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Verify the hashes of an existing run directory instead of running.
    #[arg(long, global = true)]
    check: bool,
    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,
    /// Errors only.
    #[arg(short, long, global = true)]
    quiet: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Normalized parameters and scaling constants from physical parameters.
    Normalize,
    /// Integrate the ring equation.
    SimulateLle,
    /// Integrate the Maxwell-Bloch ring system.
    SimulateMbe,
    /// Run a parameter sweep plan.
    Sweep,
    /// Regime, pulse fits and comb spectrum of a series or trajectory file.
    Analyze {
        /// Series CSV (t,re,im or t,value) or trajectory file.
        input: PathBuf,
    },
    /// Thermal excited-state occupation at frequency NU_HZ and temperature T_K.
    #[command(allow_negative_numbers = true)]
    Occupation { nu_hz: f64, t_k: f64 },
    /// Print the JSON schema of a subcommand's config document.
    Schema {
        #[arg(value_enum)]
        kind: ConfigKind,
    },
}

fn init_logging(verbose: u8, quiet: bool) {
    let level = match (quiet, verbose) {
        (true, _) => "error",
        (false, 0) => "warn",
        (false, 1) => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MASER_LOG", level))
        .format_timestamp(None)
        .init();
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.global.verbose, cli.global.quiet);
    let g = Global {
        config: cli.global.config,
        seed: cli.global.seed,
        out: cli.global.out,
        threads: cli.global.threads.map(|t| t as usize),
        check: cli.global.check,
    };
    let result = match &cli.command {
        Command::Normalize => commands::normalize(&g),
        Command::SimulateLle => commands::simulate_lle(&g),
        Command::SimulateMbe => commands::simulate_mbe(&g),
        Command::Sweep => commands::sweep(&g),
        Command::Analyze { input } => commands::analyze(&g, input),
        Command::Occupation { nu_hz, t_k } => commands::occupation(&g, *nu_hz, *t_k),
        Command::Schema { kind } => Ok(kind.schema()),
    };
    match result {
        Ok(value) => {
            let format = if matches!(cli.command, Command::Schema { .. }) {
                Format::Json
            } else {
                cli.global.format
            };
            let mut stdout = std::io::stdout().lock();
            if stdout
                .write_all(output::render(&value, format).as_bytes())
                .is_err()
            {
                return ExitCode::from(error::ExitKind::Failure.code());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.kind.code())
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use deragg::dispatch::{DispatchMode, Tolerances};
use deragg_cli::commands::*;
use deragg_cli::gen::GenSpec;
use deragg_cli::{CliError, EXIT_INVALID};

/// Aggregate the flexibility of a distribution feeder and dispatch it.
///
/// Exit codes: 0 ok, 2 invalid input, 3 infeasible, 4 not converged,
/// 5 internal error or comparison outside tolerance. Set DERAGG_THREADS to
/// bound the worker threads used for vertex searches.
#[derive(Parser)]
#[command(name = "deragg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct PveArgs {
    /// Convergence threshold on the expansion amount.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Sides of the polygons replacing apparent-power discs.
    #[arg(long)]
    segments: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    max_iterations: Option<usize>,
}

impl PveArgs {
    fn flags(&self) -> RunFlags {
        RunFlags {
            epsilon: self.epsilon,
            segments: self.segments,
            seed: self.seed,
            max_iterations: self.max_iterations,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Centralized,
    Aggregated,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the aggregate region of a case and write its hull (JSON).
    Aggregate {
        case: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        pve: PveArgs,
    },
    /// Dispatch a case against its full model or an aggregate hull.
    Dispatch {
        case: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        /// Hull written by `aggregate` (aggregated mode).
        #[arg(long)]
        hull: Option<PathBuf>,
        /// JSON report; the per-slot CSV goes next to it.
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Run both dispatch modes and compare them.
    Compare {
        case: PathBuf,
        /// Output directory.
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        pve: PveArgs,
        /// Relative total-cost tolerance.
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
        /// Per-slot gate-power tolerance (MW).
        #[arg(long, default_value_t = 1e-3)]
        gate_tolerance: f64,
    },
    /// Generate a seeded synthetic case file.
    GenCase {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 6)]
        buses: usize,
        #[arg(long, default_value_t = 2)]
        pv: usize,
        #[arg(long, default_value_t = 1)]
        storage: usize,
        #[arg(long, default_value_t = 1)]
        flex: usize,
        #[arg(long, default_value_t = 3)]
        slots: usize,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Ground-truth tools for small cases.
    #[command(subcommand)]
    Oracle(OracleCommand),
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Project by Fourier-Motzkin elimination.
    Fme {
        case: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long)]
        segments: Option<usize>,
        /// Abort when an elimination step exceeds this many rows.
        #[arg(long)]
        cap: Option<usize>,
    },
}

fn run(cli: Cli) -> Result<deragg_cli::Status, CliError> {
    match cli.command {
        Command::Aggregate { case, out, pve } => cmd_aggregate(&case, &out, &pve.flags()),
        Command::Dispatch { case, mode, hull, out } => {
            let mode = match mode {
                Mode::Centralized => DispatchMode::Centralized,
                Mode::Aggregated => DispatchMode::Aggregated,
            };
            cmd_dispatch(&case, mode, hull.as_deref(), &out)
        }
        Command::Compare {
            case,
            out,
            pve,
            tolerance,
            gate_tolerance,
        } => {
            if !(tolerance > 0.0 && gate_tolerance > 0.0) {
                return Err(CliError::Usage("tolerances must be positive".into()));
            }
            let tol = Tolerances {
                cost_relative: tolerance,
                gate_mw: gate_tolerance,
            };
            cmd_compare(&case, &out, &pve.flags(), tol)
        }
        Command::GenCase {
            seed,
            buses,
            pv,
            storage,
            flex,
            slots,
            out,
        } => {
            let spec = GenSpec {
                buses,
                pv,
                storage,
                flexbuildings: flex,
                slots,
            };
            cmd_gen_case(seed, &spec, &out)
        }
        Command::Oracle(OracleCommand::Fme { case, out, segments, cap }) => cmd_oracle_fme(&case, &out, segments, cap),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Ok(v) = std::env::var("DERAGG_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    log::warn!("could not size the thread pool: {e}");
                }
            }
            _ => {
                eprintln!("deragg: DERAGG_THREADS must be a positive integer, got {v:?}");
                return ExitCode::from(EXIT_INVALID as u8);
            }
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(status) => {
            if status != deragg_cli::Status::Ok {
                eprintln!("deragg: {status:?}");
            }
            ExitCode::from(status.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("deragg: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

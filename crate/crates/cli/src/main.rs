use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cqed_cli::{execute, execute_audit, resolve_threads, CliError, Mode, Outcome, RunConfig, THREADS_ENV};

#[derive(Parser)]
#[command(name = "cqed", version, about = "Spectra of flux-qubit/LC-resonator circuits from a TOML config")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Transition table (and steady-state populations when baths are given).
    Eigen(Common),
    /// Emission spectra for each configured probe.
    Emission(Common),
    /// Reflectivity maps S11(omega_d, epsilon) for each configured probe.
    Reflectivity(Common),
    /// Squared transition matrix elements along the sweep.
    Matelems(Common),
    /// Re-runs sampled points at a larger cutoff and Floquet order.
    Audit(Common),
}

#[derive(Args)]
struct Common {
    /// TOML file, or a bundled config: fig2, fig6.
    #[arg(long)]
    config: String,
    /// Output directory (default: output.directory from the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: $CQED_THREADS, else all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn dispatch(cli: Cli) -> Result<Outcome, CliError> {
    let (mode, args) = match cli.command {
        Command::Eigen(a) => (Some(Mode::Eigen), a),
        Command::Emission(a) => (Some(Mode::Emission), a),
        Command::Reflectivity(a) => (Some(Mode::Reflectivity), a),
        Command::Matelems(a) => (Some(Mode::MatrixElements), a),
        Command::Audit(a) => (None, a),
    };
    let env = std::env::var(THREADS_ENV).ok();
    let threads = resolve_threads(args.threads, env.as_deref())?;
    let cfg = RunConfig::load(&args.config)?;
    let out = args.out.unwrap_or_else(|| PathBuf::from(&cfg.output.directory));
    match mode {
        Some(m) => execute(&cfg, m, &out, threads, &args.config),
        None => execute_audit(&cfg, &out, threads, &args.config),
    }
}

fn main() -> ExitCode {
    let result = dispatch(Cli::parse());
    let err = match result {
        Ok(outcome) => {
            for l in &outcome.lines {
                println!("{l}");
            }
            match outcome.error {
                None => return ExitCode::SUCCESS,
                Some(e) => e,
            }
        }
        Err(e) => e,
    };
    eprintln!("{}", err.to_json());
    ExitCode::from(err.exit_code() as u8)
}

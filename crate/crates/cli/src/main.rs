mod artifact;
mod commands;
mod config;
mod error;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pspin_core::acceptance::Level;
use serde_json::Value;

use crate::config::RunConfig;
use crate::error::CliError;

const DEFAULT_OUT: &str = "pspin-out";

#[derive(Parser)]
#[command(
    name = "pspin",
    version,
    about = "Two-time dynamics solvers for spherical mixed p-spin glasses"
)]
struct Cli {
    /// Worker thread cap.
    #[arg(long, global = true, env = "PSPIN_THREADS")]
    threads: Option<usize>,
    /// Output directory, overriding the config's `out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Disorder and noise seed for `simulate` and `compare`, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    #[arg(long)]
    config: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Quick,
    Full,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value = "quick")]
    level: LevelArg,
    /// Comma-separated criterion identifiers to run instead of all.
    #[arg(long, value_delimiter = ',')]
    only: Option<Vec<String>>,
    /// Mutation smoke test: negate ψ in the shared two-time solve.
    #[arg(long)]
    inject_psi_sign_flip: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep β and tabulate the critical constants.
    Critical(ConfigArg),
    /// Solve the one-time stationary equation.
    SolveFdt(ConfigArg),
    /// Solve the two-time system on a triangular mesh.
    SolveTwotime(ConfigArg),
    /// Iterate the fixed-point map on two-time pairs.
    PsiIterate(ConfigArg),
    /// Finite-N Langevin simulation.
    Simulate(ConfigArg),
    /// Langevin simulation against a two-time grid.
    Compare(ConfigArg),
    /// Run the acceptance criteria and print a JSON verdict.
    Verify(VerifyArgs),
}

fn out_dir<T: RunConfig>(cli_out: &Option<PathBuf>, cfg: &T) -> PathBuf {
    cli_out
        .clone()
        .or_else(|| cfg.out().map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn seed_only_for_stochastic(cli: &Cli) -> Result<(), CliError> {
    match (&cli.command, cli.seed) {
        (Command::Simulate(_) | Command::Compare(_), _) | (_, None) => Ok(()),
        _ => Err(CliError::Config(
            "--seed applies to simulate and compare only".into(),
        )),
    }
}

fn run(cli: &Cli) -> Result<Value, CliError> {
    seed_only_for_stochastic(cli)?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Critical(a) => {
            let cfg = config::load(&a.config)?;
            commands::critical(&cfg, &out_dir(&cli.out, &cfg))
        }
        Command::SolveFdt(a) => {
            let cfg = config::load(&a.config)?;
            commands::solve_fdt(&cfg, &out_dir(&cli.out, &cfg))
        }
        Command::SolveTwotime(a) => {
            let cfg = config::load(&a.config)?;
            commands::solve_twotime(&cfg, &out_dir(&cli.out, &cfg))
        }
        Command::PsiIterate(a) => {
            let cfg = config::load(&a.config)?;
            commands::psi_iterate(&cfg, &out_dir(&cli.out, &cfg))
        }
        Command::Simulate(a) => {
            let mut cfg: config::SimulateConfig = config::load(&a.config)?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            commands::simulate_cmd(&cfg, &out_dir(&cli.out, &cfg))
        }
        Command::Compare(a) => {
            let mut cfg: config::CompareConfig = config::load(&a.config)?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            commands::compare(&cfg, &out_dir(&cli.out, &cfg))
        }
        Command::Verify(v) => {
            let level = match v.level {
                LevelArg::Quick => Level::Quick,
                LevelArg::Full => Level::Full,
            };
            let report = commands::verify(level, v.only.as_deref(), v.inject_psi_sign_flip)?;
            if let Some(dir) = &cli.out {
                fs::create_dir_all(dir)
                    .map_err(|e| CliError::Output(format!("{}: {e}", dir.display())))?;
                let path = dir.join("verify.json");
                let text =
                    serde_json::to_string_pretty(&report).expect("json values serialise") + "\n";
                fs::write(&path, text)
                    .map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
            }
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("json values serialise")
            );
            if report["passed"] == Value::Bool(true) {
                Ok(report)
            } else {
                let ids = report["failing"]
                    .as_array()
                    .map(|a| {
                        a.iter()
                            .filter_map(|v| v.as_str().map(String::from))
                            .collect()
                    })
                    .unwrap_or_default();
                Err(CliError::VerifyFailed(ids))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(record) => {
            if !matches!(cli.command, Command::Verify(_)) {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&record).expect("json values serialise")
                );
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("pspin: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

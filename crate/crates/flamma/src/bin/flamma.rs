use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use flamma::cli::{cmd_check_bound, cmd_compare, cmd_run};
use flamma::config::{parse_config, resolve_seed, RunManifest};
use flamma::federation::Algorithm;

const EXIT_RUNTIME: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "flamma",
    version,
    about = "Deterministic federated learning simulator with a Stackelberg incentive layer"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment described by a config file
    Run {
        /// Path to the experiment config
        #[arg(long)]
        config: PathBuf,
        /// Override the output path from the config
        #[arg(long)]
        output: Option<PathBuf>,
        /// Override the seed (flag beats FLAMMA_SEED beats config)
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run several algorithms on one shared dataset and compare them
    Compare {
        /// Path to the experiment config
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated algorithms, e.g. flamma,fedavg
        #[arg(long, value_delimiter = ',', required = true)]
        algorithms: Vec<String>,
        /// Override the output path from the config
        #[arg(long)]
        output: Option<PathBuf>,
        /// Override the seed (flag beats FLAMMA_SEED beats config)
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Verify the convergence bound on a synthetic quadratic problem
    CheckBound {
        /// Number of simulated clients
        #[arg(long, default_value_t = 10)]
        clients: usize,
        /// Clients selected per round
        #[arg(long, default_value_t = 5)]
        k: usize,
        /// Rounds per repetition
        #[arg(long, default_value_t = 50)]
        rounds: u32,
        /// Independent repetitions to average
        #[arg(long, default_value_t = 10)]
        seeds: usize,
        /// Base seed (flag beats FLAMMA_SEED; default 42)
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn env_seed() -> Result<Option<u64>, String> {
    match std::env::var("FLAMMA_SEED") {
        Ok(raw) => raw
            .parse::<u64>()
            .map(Some)
            .map_err(|_| format!("FLAMMA_SEED must be an unsigned integer, got '{raw}'")),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(format!("FLAMMA_SEED is unreadable: {e}")),
    }
}

fn load_manifest(
    path: &PathBuf,
    output: Option<PathBuf>,
    seed_flag: Option<u64>,
    seed_env: Option<u64>,
) -> flamma::Result<RunManifest> {
    let mut manifest = parse_config(path)?;
    manifest.config.seed = resolve_seed(seed_flag, seed_env, manifest.config.seed);
    if let Some(output) = output {
        manifest.output_path = output;
    }
    manifest.validate()?;
    Ok(manifest)
}

fn usage_error(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(EXIT_USAGE)
}

fn runtime_error(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(EXIT_RUNTIME)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let seed_env = match env_seed() {
        Ok(v) => v,
        Err(msg) => return usage_error(msg),
    };
    let mut stdout = std::io::stdout();

    match cli.command {
        Command::Run {
            config,
            output,
            seed,
        } => {
            let manifest = match load_manifest(&config, output, seed, seed_env) {
                Ok(m) => m,
                Err(e) => return usage_error(e),
            };
            match cmd_run(&manifest, &mut stdout) {
                Ok(_) => ExitCode::SUCCESS,
                Err(e) => runtime_error(e),
            }
        }
        Command::Compare {
            config,
            algorithms,
            output,
            seed,
        } => {
            let parsed: Result<Vec<Algorithm>, _> =
                algorithms.iter().map(|s| s.parse()).collect();
            let algorithms = match parsed {
                Ok(a) => a,
                Err(e) => return usage_error(e),
            };
            if algorithms.len() < 2 {
                return usage_error("compare needs at least two algorithms");
            }
            let manifest = match load_manifest(&config, output, seed, seed_env) {
                Ok(m) => m,
                Err(e) => return usage_error(e),
            };
            match cmd_compare(&manifest, &algorithms, &mut stdout) {
                Ok(_) => ExitCode::SUCCESS,
                Err(e) => runtime_error(e),
            }
        }
        Command::CheckBound {
            clients,
            k,
            rounds,
            seeds,
            seed,
        } => {
            if seeds == 0 {
                return usage_error("--seeds must be at least 1");
            }
            if clients == 0 || k == 0 || k > clients {
                return usage_error("need 1 <= k <= clients");
            }
            if rounds == 0 {
                return usage_error("--rounds must be at least 1");
            }
            let base = resolve_seed(seed, seed_env, 42);
            match cmd_check_bound(clients, k, rounds, seeds, base, &mut stdout) {
                Ok(report) if report.holds => ExitCode::SUCCESS,
                Ok(_) => ExitCode::from(EXIT_RUNTIME),
                Err(e) => runtime_error(e),
            }
        }
    }
}

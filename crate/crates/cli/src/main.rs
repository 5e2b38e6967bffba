//! `photonwave` command-line scenario runner.

mod config;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ScenarioConfig;
use photonwave::propagator::Fault;
use photonwave::selftest::{self, Options, Scale};

#[derive(Parser)]
#[command(
    name = "photonwave",
    version,
    about = "Photon wave function scenario runner"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a JSON config.
    Run { config: PathBuf },
    /// Run the reduced validation suite and print a report.
    Selftest {
        /// Use the full acceptance sizes.
        #[arg(long)]
        full: bool,
        /// Inject a deliberate fault (mutation hook).
        #[arg(long, value_enum)]
        fault: Option<FaultArg>,
        /// Run only this criterion (1 to 12); repeatable.
        #[arg(long = "criterion", value_parser = clap::value_parser!(u32).range(1..=12))]
        criteria: Vec<u32>,
    },
    /// Print the JSON schema of the run config.
    Schema,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum FaultArg {
    FlipWorkSign,
}

/// Thread count from the config, else THREADS, else available parallelism.
fn thread_count(from_config: Option<usize>) -> Result<usize, String> {
    if let Some(n) = from_config {
        return Ok(n);
    }
    match std::env::var("THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(format!("THREADS must be a positive integer, got {v:?}")),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn init_threads(n: usize) {
    if let Err(e) = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
    {
        log::warn!("thread pool already initialised: {e}");
    }
}

fn run(path: &PathBuf) -> ExitCode {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return ExitCode::from(4);
        }
    };
    let cfg: ScenarioConfig = match serde_json::from_str(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("configuration error: {e}");
            return ExitCode::from(2);
        }
    };
    let threads = match thread_count(cfg.threads) {
        Ok(n) => n,
        Err(e) => {
            eprintln!("configuration error: {e}");
            return ExitCode::from(2);
        }
    };
    init_threads(threads);
    match scenario::run_scenario(&cfg, threads) {
        Ok(outcome) => {
            println!(
                "{} files written to {}",
                outcome.manifest.files.len(),
                cfg.output_dir.display()
            );
            if outcome.success {
                ExitCode::SUCCESS
            } else {
                eprintln!("selftest reported failures");
                ExitCode::from(3)
            }
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config } => run(&config),
        Command::Selftest {
            full,
            fault,
            criteria,
        } => {
            match thread_count(None) {
                Ok(n) => init_threads(n),
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(2);
                }
            }
            let opts = Options {
                scale: if full { Scale::Full } else { Scale::Reduced },
                fault: fault.map_or(Fault::None, |FaultArg::FlipWorkSign| Fault::FlipWorkSign),
            };
            let report = if criteria.is_empty() {
                selftest::run(opts)
            } else {
                selftest::run_criteria(opts, &criteria)
            };
            print!("{}", report.render());
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            }
        }
        Command::Schema => {
            let schema = schemars::schema_for!(ScenarioConfig);
            println!(
                "{}",
                serde_json::to_string_pretty(&schema).expect("schema serializes")
            );
            ExitCode::SUCCESS
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dk_lab::config::{apply_seed_override, parse_config};
use dk_lab::par::with_threads;
use dk_lab::runner::run_experiment;
use dk_lab::selftest;

/// Environment variable overriding the configured master seed.
const SEED_ENV: &str = "DK_LAB_SEED";

#[derive(Parser)]
#[command(name = "dk-lab", version, about = "Dean-Kawasaki simulation and verification laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a configuration file.
    Run {
        config: PathBuf,
        /// Worker threads (default: all cores).
        #[arg(long, default_value_t = 0)]
        threads: usize,
        /// Directory for the output CSV files.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the built-in suite of exact sanity checks.
    Selftest,
}

fn run(config: PathBuf, threads: usize, output: Option<PathBuf>) -> Result<bool, String> {
    let text = std::fs::read_to_string(&config).map_err(|e| format!("{}: {e}", config.display()))?;
    let mut cfg = parse_config(&text).map_err(|e| format!("{}: {e}", config.display()))?;
    let seed = std::env::var(SEED_ENV).ok();
    apply_seed_override(&mut cfg, seed.as_deref()).map_err(|e| format!("{SEED_ENV}: {e}"))?;
    let outcome = with_threads(threads, || run_experiment(&cfg, output.as_deref())).map_err(|e| e.to_string())?;
    for r in &outcome.reports {
        println!("{}", r.summary());
    }
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    Ok(outcome.all_pass())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            threads,
            output,
        } => run(config, threads, output),
        Command::Selftest => {
            let results = selftest::run_all();
            for (name, outcome) in &results {
                match outcome {
                    Ok(()) => println!("[PASS] {name}"),
                    Err(msg) => println!("[FAIL] {name}: {msg}"),
                }
            }
            let failed = results.iter().filter(|(_, r)| r.is_err()).count();
            println!("{} of {} checks passed", results.len() - failed, results.len());
            Ok(failed == 0)
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

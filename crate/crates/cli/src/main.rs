mod artifacts;
mod batch;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use safe_imdp::abstraction::Imdp;
use safe_imdp::checker::CheckerOptions;
use safe_imdp::config::ExperimentConfig;
use safe_imdp::explorer::Analysis;
use safe_imdp::scltl::{self, Fsa, Observation};

/// Exit status contract.
pub mod exit {
    pub const SATISFIED: u8 = 0;
    pub const FAILURE: u8 = 1;
    pub const IMPOSSIBLE: u8 = 2;
    pub const BUDGET_EXHAUSTED: u8 = 3;
    pub const CONFIG_ERROR: u8 = 4;
}

#[derive(Parser)]
#[command(name = "safe-imdp", version, about = "Safe learning and synthesis with interval MDP abstractions")]
struct Cli {
    /// Root directory for run artifacts.
    #[arg(long, env = "SAFE_IMDP_ARTIFACTS", default_value = "artifacts", global = true)]
    artifacts: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment.
    Run {
        config: PathBuf,
        /// Output directory (default: a fresh directory under the artifact root).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one experiment per seed and aggregate the results.
    Batch {
        config: PathBuf,
        /// Seeds as a list and/or ranges, e.g. `1,2,5..=9`.
        #[arg(long, default_value = "1..=10")]
        seeds: String,
        /// Runs executed concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Satisfaction bounds of a formula on an interval MDP text file.
    Check {
        imdp: PathBuf,
        formula: String,
        #[arg(long, default_value_t = 1e-6)]
        epsilon: f64,
        #[arg(long, default_value_t = 100_000)]
        max_sweeps: usize,
    },
    /// Print the automaton of a formula.
    DumpFsa {
        formula: String,
        /// Extra alphabet letters, comma separated.
        #[arg(long, default_value = "")]
        alphabet: String,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::FAILURE)
        }
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig, u8> {
    ExperimentConfig::load(path).map_err(|e| {
        eprintln!("config error: {e}");
        exit::CONFIG_ERROR
    })
}

fn dispatch(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Run { config, out } => {
            let cfg = match load_config(&config) {
                Ok(c) => c,
                Err(code) => return Ok(code),
            };
            let raw = std::fs::read(&config)?;
            let dir = out.unwrap_or_else(|| artifacts::default_dir(&cli.artifacts, &config, &raw, "run"));
            let summary = artifacts::run_to_dir(&cfg, &raw, &dir)?;
            println!(
                "{} after {} iteration(s); artifacts in {}",
                summary.outcome,
                summary.iterations,
                dir.display()
            );
            if let Some(reason) = &summary.reason {
                println!("reason: {reason}");
            }
            Ok(match summary.outcome.as_str() {
                "satisfied" => exit::SATISFIED,
                "impossible" => exit::IMPOSSIBLE,
                _ => exit::BUDGET_EXHAUSTED,
            })
        }
        Command::Batch {
            config,
            seeds,
            jobs,
            out,
        } => {
            let cfg = match load_config(&config) {
                Ok(c) => c,
                Err(code) => return Ok(code),
            };
            let seeds = match batch::parse_seeds(&seeds) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("config error: {e}");
                    return Ok(exit::CONFIG_ERROR);
                }
            };
            let raw = std::fs::read(&config)?;
            let dir = out.unwrap_or_else(|| artifacts::default_dir(&cli.artifacts, &config, &raw, "batch"));
            let rows = batch::run(&cfg, &raw, &seeds, jobs, &dir)?;
            let satisfied = rows.iter().filter(|r| r.outcome == "satisfied").count();
            println!(
                "{satisfied}/{} satisfied; aggregate in {}",
                rows.len(),
                dir.join("aggregate.csv").display()
            );
            Ok(if rows.iter().any(|r| r.outcome == "error") { exit::FAILURE } else { exit::SATISFIED })
        }
        Command::Check {
            imdp,
            formula,
            epsilon,
            max_sweeps,
        } => {
            let text = std::fs::read_to_string(&imdp).with_context(|| format!("reading {}", imdp.display()))?;
            let imdp = Imdp::from_text(&text)?;
            let phi = scltl::parse(&formula)?;
            let mut letters = imdp.labels.clone();
            letters.sort();
            letters.dedup();
            let fsa = Fsa::build(&phi, &letters)?;
            let a = Analysis::new(&imdp, &fsa, &[], &CheckerOptions { epsilon, max_sweeps })?;
            println!("p_low {}", a.p_low());
            println!("p_high {}", a.p_high());
            Ok(exit::SATISFIED)
        }
        Command::DumpFsa { formula, alphabet } => {
            let phi = scltl::parse(&formula)?;
            let letters = alphabet
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(Observation::new)
                .collect::<Result<Vec<_>, _>>()?;
            print!("{}", Fsa::build(&phi, &letters)?.to_text());
            Ok(exit::SATISFIED)
        }
    }
}

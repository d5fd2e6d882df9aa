//! `curveflow`: configuration-driven experiment runner for the
//! curve-shrinking / Ricci-flow verification laboratory.
//!
//! Exit codes: 0 all checks pass, 1 configuration error, 2 runtime event
//! (chart escape or curve degeneracy, recorded in report.json), 3 at least
//! one check failed.

mod artifacts;
mod config;
mod runner;

use clap::{Parser, Subcommand};
use config::{parse_background_only, parse_config, ExperimentConfig};
use curveflow_core::scenario::{find_scenario, shipped_scenarios};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "curveflow", version, about = "Numerical laboratory for curve-shrinking flow under Ricci flow")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write trajectory, residual, margin, and
    /// report artifacts.
    Run {
        /// JSON configuration file.
        #[arg(long, conflicts_with = "scenario")]
        config: Option<PathBuf>,
        /// Name of a shipped scenario instead of a config file.
        #[arg(long)]
        scenario: Option<String>,
        /// Output directory (overrides output.directory in the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// RNG seed for constant estimation (overrides the config).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Grid-refinement study of the residual checks in a configuration.
    Convergence {
        /// JSON configuration file.
        #[arg(long, conflicts_with = "scenario")]
        config: Option<PathBuf>,
        /// Name of a shipped scenario instead of a config file.
        #[arg(long)]
        scenario: Option<String>,
        /// Output directory for the convergence tables.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Number of refinement levels (halvings of dt, doublings of N).
        #[arg(long, default_value_t = 3)]
        levels: usize,
        /// RNG seed (kept for interface symmetry; studies are seed-free).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the shipped scenario registry.
    ListScenarios,
    /// Validate the background section of a configuration file.
    ValidateBackground {
        /// JSON file holding a full config or a bare background object.
        #[arg(long)]
        config: PathBuf,
    },
}

fn load_config(
    config: Option<PathBuf>,
    scenario: Option<String>,
    seed: Option<u64>,
) -> Result<ExperimentConfig, i32> {
    let mut cfg = match (config, scenario) {
        (Some(path), None) => {
            let text = match std::fs::read_to_string(&path) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("cannot read {}: {e}", path.display());
                    return Err(runner::EXIT_CONFIG);
                }
            };
            match parse_config(&text) {
                Ok(c) => c,
                Err(e) => {
                    eprint!("{e}");
                    return Err(runner::EXIT_CONFIG);
                }
            }
        }
        (None, Some(name)) => match find_scenario(&name) {
            Some(s) => ExperimentConfig::from_scenario(&s),
            None => {
                eprintln!("unknown scenario \"{name}\"; see `curveflow list-scenarios`");
                return Err(runner::EXIT_CONFIG);
            }
        },
        _ => {
            eprintln!("exactly one of --config or --scenario is required");
            return Err(runner::EXIT_CONFIG);
        }
    };
    if let Some(s) = seed {
        cfg.rng_seed = s;
    }
    Ok(cfg)
}

fn out_dir(cfg: &ExperimentConfig, flag: Option<PathBuf>) -> Result<PathBuf, i32> {
    match flag.or_else(|| cfg.out_dir.clone()) {
        Some(d) => Ok(d),
        None => {
            eprintln!("no output directory: pass --out or set output.directory");
            Err(runner::EXIT_CONFIG)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { config, scenario, out, seed } => {
            match load_config(config, scenario, seed) {
                Ok(cfg) => match out_dir(&cfg, out) {
                    Ok(dir) => match runner::run_experiment(&cfg, &dir) {
                        Ok(code) => code,
                        Err(e) => {
                            eprintln!("run failed: {e}");
                            runner::EXIT_CONFIG
                        }
                    },
                    Err(code) => code,
                },
                Err(code) => code,
            }
        }
        Command::Convergence { config, scenario, out, levels, seed } => {
            match load_config(config, scenario, seed) {
                Ok(cfg) => match out_dir(&cfg, out) {
                    Ok(dir) => match runner::run_convergence(&cfg, levels, &dir) {
                        Ok(code) => code,
                        Err(e) => {
                            eprintln!("convergence study failed: {e}");
                            runner::EXIT_CONFIG
                        }
                    },
                    Err(code) => code,
                },
                Err(code) => code,
            }
        }
        Command::ListScenarios => {
            for s in shipped_scenarios() {
                println!("{:<20} {}", s.name, s.description);
            }
            runner::EXIT_OK
        }
        Command::ValidateBackground { config } => {
            let text = match std::fs::read_to_string(&config) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("cannot read {}: {e}", config.display());
                    return ExitCode::from(runner::EXIT_CONFIG as u8);
                }
            };
            match parse_background_only(&text) {
                Ok(spec) => {
                    println!("ok: {} with horizon {}", spec.kind_name(), spec.horizon);
                    runner::EXIT_OK
                }
                Err(e) => {
                    eprint!("{e}");
                    runner::EXIT_CONFIG
                }
            }
        }
    };
    ExitCode::from(code as u8)
}

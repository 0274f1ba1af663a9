//! `revprice`: batch front-end for the pricing simulator.
//!
//! Reads a flat `key = value` scenario config, runs the per-slot simulation
//! or the participation-floor sweep, writes deterministic CSV tables, and
//! runs the self-validation oracle suite.
//!
//! Exit codes: 0 success, 1 validation failure, 2 config error, 3 I/O error.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use revprice_core::{run_validation, simulate_csv, sweep_csv, ScenarioConfig};

const EXIT_VALIDATION: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(
    name = "revprice",
    about = "Forward/reverse pricing market simulator",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every slot under both schemes and write the per-slot CSV table
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the config's master seed
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Sweep the participation-floor ratio at the configured slot and write the CSV table
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the self-validation oracle suite and report each check's margin
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn load_config(path: &PathBuf, seed: Option<u64>) -> Result<ScenarioConfig, ExitCode> {
    let text = fs::read_to_string(path).map_err(|err| {
        eprintln!("error: cannot read config {}: {err}", path.display());
        ExitCode::from(EXIT_IO)
    })?;
    let mut cfg = ScenarioConfig::parse(&text).map_err(|err| {
        eprintln!("error: {err}");
        ExitCode::from(EXIT_CONFIG)
    })?;
    if let Some(seed) = seed {
        cfg.master_seed = seed;
    }
    Ok(cfg)
}

fn write_table(path: &PathBuf, table: &str) -> Result<(), ExitCode> {
    fs::write(path, table).map_err(|err| {
        eprintln!("error: cannot write {}: {err}", path.display());
        ExitCode::from(EXIT_IO)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate { config, out, seed } => {
            let cfg = match load_config(&config, seed) {
                Ok(cfg) => cfg,
                Err(code) => return code,
            };
            let table = match simulate_csv(&cfg) {
                Ok(table) => table,
                Err(err) => {
                    eprintln!("error: {err}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            if let Err(code) = write_table(&out, &table) {
                return code;
            }
            println!(
                "wrote {} ({} rows)",
                out.display(),
                table.lines().count() - 1
            );
            ExitCode::SUCCESS
        }
        Command::Sweep { config, out, seed } => {
            let cfg = match load_config(&config, seed) {
                Ok(cfg) => cfg,
                Err(code) => return code,
            };
            let table = match sweep_csv(&cfg) {
                Ok(table) => table,
                Err(err) => {
                    eprintln!("error: {err}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            if let Err(code) = write_table(&out, &table) {
                return code;
            }
            println!(
                "wrote {} ({} rows)",
                out.display(),
                table.lines().count() - 1
            );
            ExitCode::SUCCESS
        }
        Command::Validate { config, seed } => {
            let cfg = match load_config(&config, seed) {
                Ok(cfg) => cfg,
                Err(code) => return code,
            };
            let reports = match run_validation(&cfg) {
                Ok(reports) => reports,
                Err(err) => {
                    eprintln!("error: {err}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            let mut all_passed = true;
            for report in &reports {
                println!(
                    "check {:<24} {}  margin={:+.3e}  {}",
                    report.name,
                    if report.passed { "PASS" } else { "FAIL" },
                    report.margin,
                    report.detail
                );
                all_passed &= report.passed;
            }
            let passed = reports.iter().filter(|r| r.passed).count();
            println!("validation: {passed}/{} checks passed", reports.len());
            if all_passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_VALIDATION)
            }
        }
    }
}

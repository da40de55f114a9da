use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use oirl_cli::acceptance::run_all;
use oirl_cli::config::{parse_config, ScenarioConfig};
use oirl_cli::runner::{run, write_outputs};
use oirl_core::Error;

#[derive(Parser)]
#[command(
    name = "oirl",
    version,
    about = "Coupled two-agent simulation with disturbance rejection, drift-parameter \
             estimation, and reward-weight recovery"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and write CSV logs plus a summary.
    Run {
        /// Key-value configuration file.
        config: PathBuf,
        /// Output directory; overrides `out_dir` from the configuration.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every acceptance criterion against a scenario and report one line each.
    Check {
        /// Key-value configuration file.
        config: PathBuf,
    },
    /// Print the default configuration in the accepted key-value format.
    DumpConfig,
}

/// Exit code contract: 1 for configuration or criterion failures, 2 when the
/// numerics break down mid-run.
fn exit_for(err: &Error) -> ExitCode {
    match err {
        Error::Diverged { .. }
        | Error::NonFinite { .. }
        | Error::NonFiniteSample { .. }
        | Error::Conditioning { .. } => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn load_config(path: &Path) -> anyhow::Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading configuration file {}", path.display()))?;
    Ok(parse_config(&text)?)
}

fn run_command(config: &Path, out: Option<PathBuf>) -> ExitCode {
    let cfg = match load_config(config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let out_dir = out.unwrap_or_else(|| PathBuf::from(&cfg.out_dir));
    let log = match run(&cfg) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_for(&e);
        }
    };
    for w in &log.warnings {
        eprintln!("warning: {w}");
    }
    if let Err(e) = write_outputs(&log, &out_dir) {
        eprintln!("error: writing outputs to {}: {e}", out_dir.display());
        return ExitCode::from(1);
    }
    if let Some(last) = log.rows.last() {
        println!(
            "simulated {} steps to t = {:.3}",
            log.rows.len().saturating_sub(1),
            last.t
        );
        println!(
            "final errors: disturbance {:.3e}, drift parameters {:.3e}, reward weights {:.3e}",
            last.dist_err, last.theta_err, last.w_err
        );
    }
    for name in ["run.csv", "events.csv", "summary.txt", "pe_stack.csv", "irl_stack.csv"] {
        println!("wrote {}", out_dir.join(name).display());
    }
    ExitCode::SUCCESS
}

fn check_command(config: &Path) -> ExitCode {
    let cfg = match load_config(config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let results = match run_all(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_for(&e);
        }
    };
    let mut failures = 0usize;
    for r in &results {
        println!("{}", r.line());
        if !r.passed {
            failures += 1;
        }
    }
    if failures == 0 {
        println!("all {} criteria passed", results.len());
        ExitCode::SUCCESS
    } else {
        println!("{failures} of {} criteria failed", results.len());
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config, out } => run_command(&config, out),
        Command::Check { config } => check_command(&config),
        Command::DumpConfig => {
            print!("{}", ScenarioConfig::default().dump());
            ExitCode::SUCCESS
        }
    }
}

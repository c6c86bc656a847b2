//! `nlsasym` — run the asymptotics experiments from the command line.
//!
//! Each subcommand runs one registered experiment.  Without `--config` the
//! experiment's default configuration is used; `--print-config` shows it as
//! JSON, which is the format `--config` accepts.  The process exits with
//! status 1 when any required check fails and 2 on errors.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use nlsasym::harness::{default_config, run_experiment, ExperimentConfig};

#[derive(Parser, Debug)]
#[command(name = "nlsasym", version, about = "Long-time asymptotics experiments for the defocusing NLS equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON experiment configuration (defaults of the subcommand if absent).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory for CSV tables and the JSON report.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Override every quadrature tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Print the effective configuration as JSON and exit.
    #[arg(long, global = true)]
    print_config: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Reflection coefficient on the z-grid and unitarity residual.
    Scatter,
    /// ln t/t coefficients at several stationary points and their cancellation.
    Alpha,
    /// Leading-order asymptotic prediction on a z₀-window.
    Predict,
    /// Split-step NLS run with conserved quantities.
    Evolve,
    /// Leading-term error against the PDE and its fitted decay rate.
    RatesNls,
    /// Linear-expansion partial sums against the exact solution.
    RatesLinear,
    /// Decay rates of the Ω₁ remainder integrals.
    RatesAppendixA,
}

impl Command {
    fn experiment(self) -> &'static str {
        match self {
            Command::Scatter => "scatter",
            Command::Alpha => "alpha",
            Command::Predict => "predict",
            Command::Evolve => "evolve",
            Command::RatesNls => "rates-nls",
            Command::RatesLinear => "rates-linear",
            Command::RatesAppendixA => "rates-appendix-a",
        }
    }
}

fn effective_config(cli: &Cli) -> Result<ExperimentConfig> {
    let name = cli.command.experiment();
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)
            .with_context(|| format!("reading configuration {}", path.display()))?,
        None => default_config(name)?,
    };
    if cfg.experiment != name {
        log::warn!("configuration names experiment '{}'; running '{name}'", cfg.experiment);
        cfg.experiment = name.into();
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = Some(out.clone());
    }
    if let Some(t) = cli.tol {
        cfg.set_quadrature_tol(t);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<bool> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let cfg = effective_config(cli)?;
    if cli.print_config {
        println!("{}", serde_json::to_string_pretty(&cfg)?);
        return Ok(true);
    }
    let report = run_experiment(&cfg)?;
    for check in &report.checks {
        println!("{check}");
    }
    for file in &report.files {
        println!("wrote {}", file.display());
    }
    println!(
        "{}: {} in {:.1} s",
        report.experiment,
        if report.passed { "PASS" } else { "FAIL" },
        report.elapsed_seconds
    );
    Ok(report.passed)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn subcommands_map_to_registered_experiments() {
        let names = nlsasym::harness::experiment_registry().names();
        for cmd in [
            Command::Scatter,
            Command::Alpha,
            Command::Predict,
            Command::Evolve,
            Command::RatesNls,
            Command::RatesLinear,
            Command::RatesAppendixA,
        ] {
            assert!(names.contains(&cmd.experiment().to_string()), "{cmd:?}");
        }
    }

    #[test]
    fn flags_override_the_configuration() {
        let cli = Cli::parse_from(["nlsasym", "alpha", "--tol", "1e-9", "--out", "/tmp/x"]);
        let cfg = effective_config(&cli).unwrap();
        assert_eq!(cfg.experiment, "alpha");
        assert_eq!(cfg.alpha.tol, 1e-9);
        assert_eq!(cfg.remainder.tol, 1e-9);
        assert_eq!(cfg.out_dir, Some(PathBuf::from("/tmp/x")));
        let bad = Cli::parse_from(["nlsasym", "alpha", "--tol=-1"]);
        assert!(effective_config(&bad).is_err());
    }
}

//! `hybridqf` command-line front end.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "hybridqf", version, about = "Quasi-free hybrid quantum-classical dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Model file (TOML).
    #[arg(long, global = true)]
    model: Option<PathBuf>,
    /// Built-in example: boltzmann, optomechanical, classical-oscillator, hybrid.
    #[arg(long, global = true)]
    example: Option<String>,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Sampler seed; overrides sampler.seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Tolerance on the positivity check.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Points per grid axis.
    #[arg(long, global = true)]
    grid: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Check positivity and the Lévy measure, report interaction flags.
    Validate,
    /// Evolved characteristic function on probe points.
    Propagate,
    /// Wigner/phase-space density on a grid.
    Wigner,
    /// Equilibrium exponent and its Gaussian covariance.
    Equilibrium,
    /// Monte-Carlo paths of the classical component.
    Sample,
    /// Multi-time characteristic function and conditional probabilities.
    Instrument,
    /// Write the model as a model file.
    Export,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Propagate => "propagate",
            Command::Wigner => "wigner",
            Command::Equilibrium => "equilibrium",
            Command::Sample => "sample",
            Command::Instrument => "instrument",
            Command::Export => "export",
        }
    }
}

fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::read(p)?,
        None => RunConfig::default(),
    };
    if let Some(p) = &cli.model {
        cfg.model.path = Some(p.display().to_string());
        cfg.model.example = None;
    }
    if let Some(e) = &cli.example {
        cfg.model.example = Some(e.clone());
        cfg.model.path = None;
    }
    if let Some(t) = cli.tol {
        cfg.model.tol = Some(t);
    }
    if let Some(g) = cli.grid {
        cfg.grid.count = Some(g);
    }
    if let Some(o) = &cli.out {
        cfg.output.path = Some(o.display().to_string());
    }
    Ok(cfg)
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("HYBRIDQF_THREADS") {
        let n: usize = v.trim().parse().with_context(|| format!("HYBRIDQF_THREADS={v:?} is not a thread count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<bool> {
    init_threads()?;
    let cfg = resolve(cli)?;
    let outcome = match cli.command {
        Command::Validate => commands::validate(&cfg)?,
        Command::Propagate => commands::propagate(&cfg)?,
        Command::Wigner => commands::wigner(&cfg)?,
        Command::Equilibrium => commands::equilibrium(&cfg)?,
        Command::Sample => commands::sample(&cfg, cli.seed)?,
        Command::Instrument => commands::instrument(&cfg)?,
        Command::Export => commands::export(&cfg)?,
    };
    match &cfg.output.path {
        Some(p) => std::fs::write(p, &outcome.text).with_context(|| format!("writing {p}"))?,
        None => print!("{}", outcome.text),
    }
    for n in &outcome.notes {
        eprintln!("{}: {n}", cli.command.name());
    }
    if !outcome.pass {
        eprintln!("{}: self-check failed", cli.command.name());
    }
    Ok(outcome.pass)
}

fn main() -> ExitCode {
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

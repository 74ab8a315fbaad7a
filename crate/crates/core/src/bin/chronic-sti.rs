use anyhow::Context;
use chronic_sti::engine::Engine;
use chronic_sti::error::PipelineError;
use chronic_sti::pipeline::{self, Command, PipelineConfig};
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Chronic STI transmission models: simulate evidence, calibrate, fit and
/// run the cost-effectiveness analysis.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// TOML experiment config; defaults reproduce the case study.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Maximum worker threads.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Restrict `cea` to one model (ode or markov).
    #[arg(long, global = true, value_parser = parse_engine)]
    engine: Option<Engine>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Simulate the registry, binomial and calibration data.
    Simulate,
    /// Monte Carlo calibration of the deterministic ODE model.
    CalibrateDode,
    /// Bayesian fit of the ODE model.
    FitBode,
    /// Bayesian fit of the Markov model.
    FitBmm,
    /// Probabilistic cost-effectiveness analysis.
    Cea,
    /// All three models on shared data, with figures and the ICER table.
    Compare,
}

fn parse_engine(s: &str) -> Result<Engine, String> {
    Engine::parse(s).ok_or_else(|| format!("unknown engine `{s}` (expected ode or markov)"))
}

fn execute(cli: &Cli) -> anyhow::Result<pipeline::RunManifest> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p).with_context(|| format!("loading config {}", p.display()))?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg = cfg.with_seed(seed);
    }
    let command = match cli.command {
        Cmd::Simulate => Command::Simulate,
        Cmd::CalibrateDode => Command::CalibrateDode,
        Cmd::FitBode => Command::FitBode,
        Cmd::FitBmm => Command::FitBmm,
        Cmd::Cea => Command::Cea,
        Cmd::Compare => Command::Compare,
    };
    let manifest = pipeline::with_workers(cli.workers, || pipeline::run(command, &cfg, &cli.out, cli.engine))?
        .with_context(|| format!("running {}", command.name()))?;
    Ok(manifest)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(m) => {
            for w in &m.warnings {
                eprintln!("warning: {w}");
            }
            for s in &m.stages {
                println!("{:<24} {:>9.2} s", s.stage, s.seconds);
            }
            if let Some(r) = &m.runtime {
                println!(
                    "BMM sampler {:.2} s, BODE sampler {:.2} s, speed-up {:.1}x",
                    r.bmm_seconds, r.bode_seconds, r.speedup
                );
            }
            println!("{} files written to {}", m.outputs.len() + 1, cli.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<PipelineError>().map_or(1, PipelineError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}

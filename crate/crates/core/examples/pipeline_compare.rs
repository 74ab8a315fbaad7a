//! Runs the full `compare` pipeline at a reduced budget: data simulation,
//! dODE calibration, both Bayesian fits, cost-effectiveness and figures.
//! Artefacts and `manifest.json` go to a directory given as the first
//! argument, or a temporary one.

use anyhow::Result;
use chronic_sti::pipeline::{run, Command, PipelineConfig};
use std::path::PathBuf;

fn main() -> Result<()> {
    let out = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("chronic-sti-compare"), PathBuf::from);
    let mut cfg = PipelineConfig::default().with_seed(7);
    cfg.mcmc.burn_in = 300;
    cfg.mcmc.n_keep = 50;
    cfg.calibrate.n_samples = 500;

    let manifest = run(Command::Compare, &cfg, &out, None)?;
    for s in &manifest.stages {
        println!("{:<28} {:>8.2} s", s.stage, s.seconds);
    }
    for f in &manifest.outputs {
        println!("{:<44} {:>9} bytes", f.path, f.bytes);
    }
    if let Some(r) = &manifest.runtime {
        println!("BMM {:.2} s vs BODE {:.2} s: {:.0}x faster", r.bmm_seconds, r.bode_seconds, r.speedup);
    }
    for w in &manifest.warnings {
        println!("warning: {w}");
    }
    Ok(())
}

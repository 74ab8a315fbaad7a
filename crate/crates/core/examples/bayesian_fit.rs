//! Fits the Bayesian Markov model to simulated evidence with the
//! Metropolis-within-Gibbs sampler and prints posterior summaries and
//! convergence diagnostics. Pass `ode` to fit the ODE model instead.

use anyhow::Result;
use chronic_sti::bayes::{sample, McmcConfig, Posterior};
use chronic_sti::datasim::{simulate_evidence, SimRecipe};
use chronic_sti::engine::Engine;
use chronic_sti::model::ParamId;
use std::time::Instant;

fn main() -> Result<()> {
    let engine = match std::env::args().nth(1).as_deref() {
        Some("ode") => Engine::Ode,
        _ => Engine::Markov,
    };
    let evidence = simulate_evidence(&SimRecipe::case_study(1))?;
    let posterior = Posterior::case_study(evidence, engine)?;
    let cfg = McmcConfig { n_keep: 500, ..McmcConfig::default() };

    let t = Instant::now();
    let draws = sample(&cfg, &posterior)?;
    println!("{engine}: {} draws from {} chains in {:.2} s", draws.len(), draws.n_chains, t.elapsed().as_secs_f64());

    println!("{:<10} {:>10} {:>10} {:>10} {:>7} {:>7}", "parameter", "mean", "2.5%", "97.5%", "R-hat", "accept");
    for id in ParamId::ALL {
        let Some(rhat) = draws.rhat.get(&id) else { continue };
        let (lo, hi) = draws.interval95(id);
        println!(
            "{:<10} {:>10.5} {:>10.5} {:>10.5} {:>7.3} {:>7}",
            id.name(),
            draws.mean(id),
            lo,
            hi,
            rhat,
            draws.acceptance.get(&id).map_or("exact".into(), |a| format!("{a:.2}"))
        );
    }
    println!("converged: {}", draws.converged());
    for w in &draws.warnings {
        println!("warning: {w}");
    }
    Ok(())
}

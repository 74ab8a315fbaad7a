//! Probabilistic cost-effectiveness of vaccination: propagates posterior
//! draws through both interventions, then summarises the ICER, the
//! acceptability curve and the expected value of perfect information.

use anyhow::Result;
use chronic_sti::bayes::{sample, McmcConfig, Posterior};
use chronic_sti::datasim::{simulate_evidence, SimRecipe};
use chronic_sti::econ::{psa, EconConfig};
use chronic_sti::engine::Engine;
use chronic_sti::model::CohortState;

fn main() -> Result<()> {
    let evidence = simulate_evidence(&SimRecipe::case_study(1))?;
    let posterior = Posterior::case_study(evidence, Engine::Markov)?;
    let mut draws = sample(&McmcConfig::default(), &posterior)?;
    draws.attach_trajectories(&posterior.settings, &posterior.init, 99)?;

    let econ = EconConfig::default();
    let cohort = CohortState::case_study().total();
    let r = psa(&draws, &econ, cohort)?;

    println!("draws: {}", r.outcomes.len());
    println!("mean incremental cost:  {:>16.0}", r.mean_delta_c);
    println!("mean incremental QALYs: {:>16.1}", r.mean_delta_e);
    match r.icer {
        Some(i) => println!("ICER: {i:.2} per QALY"),
        None => println!("ICER undefined (no mean QALY gain)"),
    }
    let dominant = r.delta_c.iter().zip(&r.delta_e).filter(|(c, e)| **c < 0.0 && **e > 0.0).count();
    println!("draws where vaccination saves money and gains QALYs: {dominant}");

    println!("\n{:>8} {:>8} {:>16}", "k", "CEAC", "population EVPI");
    for k in [0.0, 5_000.0, 10_000.0, 20_000.0, econ.wtp_reference, 50_000.0] {
        let evpi = r.evpi_at(k).map_or(f64::NAN, |p| p.population);
        println!("{k:>8.0} {:>8.3} {evpi:>16.3e}", r.ceac_at(k));
    }
    Ok(())
}

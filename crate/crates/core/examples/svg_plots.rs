//! Draws ODE and yearly Markov trajectories for high-risk females side by
//! side with the built-in SVG renderer.

use anyhow::Result;
use chronic_sti::markov::{self, MarkovConfig};
use chronic_sti::model::{CohortState, HealthState, Intervention, ParameterSet, Stratum};
use chronic_sti::ode::{integrate, OdeConfig};
use chronic_sti::svg::{grid, Plot, Series, Style};

fn main() -> Result<()> {
    let init = CohortState::case_study();
    let params = ParameterSet::reference();
    let ode = integrate(&init, &params, &OdeConfig::with_horizon(100.0), Intervention::StatusQuo)?.trajectory;
    let bmm = markov::run(&init, &params, &MarkovConfig::default(), Intervention::StatusQuo)?;

    let points = |v: Vec<f64>| v.into_iter().enumerate().map(|(t, y)| (t as f64, y)).collect::<Vec<_>>();
    let plots: Vec<Plot> = HealthState::ALIVE
        .iter()
        .map(|&hs| {
            Plot::new(format!("High-risk females: {}", hs.name()), "year", "persons")
                .with(Series::new("ODE", points(ode.series(Stratum::FEMALE_HIGH, hs)), "#1f77b4", Style::Line))
                .with(Series::new("Markov", points(bmm.series(Stratum::FEMALE_HIGH, hs)), "#d62728", Style::Dashed))
        })
        .collect();

    let path = std::env::temp_dir().join("chronic_sti_trajectories.svg");
    std::fs::write(&path, grid(&plots, 2))?;
    println!("wrote {}", path.display());
    Ok(())
}

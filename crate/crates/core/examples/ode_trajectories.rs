//! Integrates the ODE model at the reference parameters under both
//! interventions and reports infection prevalence and deaths over a century.

use anyhow::Result;
use chronic_sti::model::{CohortState, HealthState, Intervention, ParameterSet, Stratum};
use chronic_sti::ode::{integrate, OdeConfig};

fn prevalence(s: &CohortState, st: Stratum) -> f64 {
    s.infected_by_stratum()[st.index()] / s.alive(st)
}

fn main() -> Result<()> {
    let init = CohortState::case_study();
    let params = ParameterSet::reference();
    let cfg = OdeConfig::with_horizon(100.0);

    let sq = integrate(&init, &params, &cfg, Intervention::StatusQuo)?;
    let vac = integrate(&init, &params, &cfg, Intervention::Vaccination)?;
    println!(
        "RK4 steps: {}, largest local error estimate: {:.3e} persons",
        sq.diagnostics.steps, sq.diagnostics.max_local_error
    );

    println!("{:>5}  {:>10} {:>10}  {:>10} {:>10}", "year", "prev MH", "prev FH", "vac MH", "vac FH");
    for y in [0, 1, 2, 5, 10, 20, 50, 100] {
        let (a, b) = (&sq.trajectory.states[y], &vac.trajectory.states[y]);
        println!(
            "{y:>5}  {:>10.5} {:>10.5}  {:>10.5} {:>10.5}",
            prevalence(a, Stratum::MALE_HIGH),
            prevalence(a, Stratum::FEMALE_HIGH),
            prevalence(b, Stratum::MALE_HIGH),
            prevalence(b, Stratum::FEMALE_HIGH)
        );
    }

    let dead = |t: &chronic_sti::model::Trajectory| t.states.last().map_or(0.0, |s| s.state_total(HealthState::Dead));
    println!(
        "deaths after 100 years: status quo {:.0}, vaccination {:.0}",
        dead(&sq.trajectory),
        dead(&vac.trajectory)
    );
    Ok(())
}

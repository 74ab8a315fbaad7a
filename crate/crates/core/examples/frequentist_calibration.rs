//! Deterministic ODE calibration: Monte Carlo samples from the priors are
//! scored by squared error against the calibration series, and the best
//! set and quantile scenarios drive a point ICER with a range.

use anyhow::Result;
use chronic_sti::calibrate::{calibrate, sampling_priors, scenario_quantiles, CalibrateConfig};
use chronic_sti::datasim::{simulate_evidence, SimRecipe};
use chronic_sti::econ::EconConfig;
use chronic_sti::model::CohortState;
use std::time::Instant;

fn main() -> Result<()> {
    let evidence = simulate_evidence(&SimRecipe::case_study(1))?;
    let init = CohortState::case_study();
    let priors = sampling_priors(&evidence)?;
    let cfg = CalibrateConfig { n_samples: 5_000, ..CalibrateConfig::default() };

    let t = Instant::now();
    let run = calibrate(&priors, &evidence.calibration, &init, &cfg)?;
    println!("scored {} samples in {:.1} s\n", run.samples.len(), t.elapsed().as_secs_f64());
    println!("{}", run.report());

    let icers = scenario_quantiles(&run, &init, &cfg.ode, &EconConfig::default())?;
    let show = |v: Option<f64>| v.map_or("undefined".to_string(), |x| format!("{x:.0}"));
    println!("ICER at best fit: {} (scenario range {} to {})", show(icers.point), show(icers.lower), show(icers.upper));
    Ok(())
}

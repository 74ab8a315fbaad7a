//! Synthetic evidence for the fictional case study: a partner-count
//! registry, binomial studies for the probability parameters and a noisy
//! five-year calibration series produced by the ODE model at the reference
//! parameter values.

use crate::bayes::{CalibrationSeries, EvidenceData, CALIBRATION_YEARS};
use crate::engine::Engine;
use crate::error::ModelError;
use crate::model::{CohortState, Intervention, ParamId, ParameterSet, Stratum};
use crate::ode::{self, OdeConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimRecipe {
    pub seed: u64,
    /// Registry respondents per stratum.
    pub popsize: usize,
    pub reference: ParameterSet,
    pub init: CohortState,
    /// Trials in the binomial study behind each probability parameter.
    pub binomial_sizes: BTreeMap<ParamId, u64>,
    /// Add Poisson observation noise to the calibration series.
    pub calibration_noise: bool,
    /// Model that produces the noiseless calibration series.
    pub generator: Engine,
    pub ode: OdeConfig,
}

impl Default for SimRecipe {
    fn default() -> Self {
        SimRecipe::case_study(1)
    }
}

impl SimRecipe {
    pub fn case_study(seed: u64) -> Self {
        let binomial_sizes = [
            (ParamId::Beta, 1000),
            (ParamId::Eta, 500),
            (ParamId::Sigma, 500),
            (ParamId::Alpha, 500),
            (ParamId::Gamma, 500),
        ]
        .into_iter()
        .collect();
        SimRecipe {
            seed,
            popsize: 500,
            reference: ParameterSet::reference(),
            init: CohortState::case_study(),
            binomial_sizes,
            calibration_noise: true,
            generator: Engine::Ode,
            ode: OdeConfig::default(),
        }
    }

    // Independent streams per evidence source, so toggling one source does
    // not shift the others.
    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

fn poisson_draw(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let d: Poisson<f64> = Poisson::new(mean).expect("positive finite mean");
    d.sample(rng) as u64
}

/// `popsize` Poisson partner counts per stratum with the reference ω as
/// mean.
pub fn simulate_registry(recipe: &SimRecipe) -> [Vec<u64>; 4] {
    let mut rng = recipe.rng(1);
    std::array::from_fn(|k| {
        let mean = recipe.reference.omega(Stratum::ALL[k]);
        (0..recipe.popsize).map(|_| poisson_draw(&mut rng, mean)).collect()
    })
}

/// `(r, n)` for every parameter with a binomial sample size.
pub fn simulate_binomial(recipe: &SimRecipe) -> BTreeMap<ParamId, (u64, u64)> {
    let mut rng = recipe.rng(2);
    recipe
        .binomial_sizes
        .iter()
        .map(|(&id, &n)| {
            let p = recipe.reference.get(id).clamp(0.0, 1.0);
            let r = Binomial::new(n, p).expect("probability in [0, 1]").sample(&mut rng);
            (id, (r, n))
        })
        .collect()
}

/// Yearly model counts for years 1–5 under the status quo, optionally with
/// Poisson observation noise.
pub fn simulate_calibration_series(recipe: &SimRecipe) -> Result<CalibrationSeries, ModelError> {
    let years = CALIBRATION_YEARS - 1;
    let traj = match recipe.generator {
        Engine::Ode => {
            let cfg = OdeConfig { horizon: years as f64, ..recipe.ode };
            ode::integrate(&recipe.init, &recipe.reference, &cfg, Intervention::StatusQuo)?.trajectory
        }
        Engine::Markov => Engine::Markov.simulate(&recipe.init, &recipe.reference, years, Intervention::StatusQuo)?,
    };
    let mut series = CalibrationSeries::from_trajectory(&traj).expect("five yearly snapshots");
    if recipe.calibration_noise {
        let mut rng = recipe.rng(3);
        for sex in series.counts.iter_mut() {
            for year in sex.iter_mut() {
                for c in year.iter_mut() {
                    *c = poisson_draw(&mut rng, *c) as f64;
                }
            }
        }
    }
    Ok(series)
}

pub fn simulate_evidence(recipe: &SimRecipe) -> Result<EvidenceData, ModelError> {
    Ok(EvidenceData {
        partner_counts: simulate_registry(recipe),
        binomial: simulate_binomial(recipe),
        calibration: simulate_calibration_series(recipe)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{HealthState, Sex};
    use proptest::prelude::*;

    #[test]
    fn registry_mean_within_clt_bound() {
        let r = simulate_registry(&SimRecipe::case_study(11));
        let mh = &r[Stratum::MALE_HIGH.index()];
        assert_eq!(mh.len(), 500);
        let mean = mh.iter().sum::<u64>() as f64 / 500.0;
        assert!((mean - 9.10).abs() < 3.0 * (9.10f64 / 500.0).sqrt(), "{mean}");
    }

    #[test]
    fn zero_mean_gives_zero_counts() {
        let mut recipe = SimRecipe::case_study(1);
        recipe.reference.omega = [0.0; 4];
        assert!(simulate_registry(&recipe).iter().flatten().all(|&c| c == 0));
    }

    #[test]
    fn reproducible() {
        let a = simulate_evidence(&SimRecipe::case_study(5)).unwrap();
        let b = simulate_evidence(&SimRecipe::case_study(5)).unwrap();
        assert_eq!(a, b);
        let c = simulate_evidence(&SimRecipe::case_study(6)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn noiseless_series_equals_ode() {
        let mut recipe = SimRecipe::case_study(1);
        recipe.calibration_noise = false;
        let s = simulate_calibration_series(&recipe).unwrap();
        assert_eq!(s.get(Sex::Female, 1, HealthState::Susceptible), 99_940.0);
        assert_eq!(s.get(Sex::Male, 1, HealthState::Infected), 60.0);
        let sol =
            ode::integrate(&recipe.init, &recipe.reference, &OdeConfig::with_horizon(4.0), Intervention::StatusQuo)
                .unwrap();
        for year in 1..=5 {
            for hs in HealthState::ALIVE {
                assert_eq!(s.get(Sex::Female, year, hs), sol.trajectory.states[year - 1].get(Stratum::FEMALE_HIGH, hs));
            }
        }
    }

    #[test]
    fn markov_generator() {
        let mut recipe = SimRecipe::case_study(1);
        recipe.calibration_noise = false;
        recipe.generator = Engine::Markov;
        let s = simulate_calibration_series(&recipe).unwrap();
        let traj = Engine::Markov.simulate(&recipe.init, &recipe.reference, 4, Intervention::StatusQuo).unwrap();
        assert_eq!(s, CalibrationSeries::from_trajectory(&traj).unwrap());
    }

    #[test]
    fn binomial_evidence_shape() {
        let b = simulate_binomial(&SimRecipe::case_study(2));
        assert_eq!(b.len(), 5);
        assert_eq!(b[&ParamId::Beta].1, 1000);
        assert!(b.values().all(|(r, n)| r <= n));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn counts_are_nonnegative_integers(seed in any::<u64>()) {
            let e = simulate_evidence(&SimRecipe::case_study(seed)).unwrap();
            for (_, _, _, c) in e.calibration.points() {
                prop_assert!(c >= 0.0 && c.fract() == 0.0);
            }
        }
    }
}

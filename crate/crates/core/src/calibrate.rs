//! Probabilistic calibration of the deterministic ODE model: sample many
//! parameter sets, score each by its sum of squared errors against the
//! calibration series, keep the best.

use crate::bayes::{CalibrationSeries, EvidenceData, Posterior, PriorSet, CALIBRATION_YEARS};
use crate::econ::{DrawOutcome, EconConfig};
use crate::engine::Engine;
use crate::error::{BayesError, ModelError};
use crate::model::{CohortState, Intervention, ParamId, ParameterSet};
use crate::ode::{self, OdeConfig};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingScheme {
    #[default]
    MonteCarlo,
    LatinHypercube,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrateConfig {
    pub n_samples: usize,
    pub scheme: SamplingScheme,
    pub seed: u64,
    /// Score-ranked positions of the two scenario sets.
    pub scenario_quantiles: [f64; 2],
    /// Solver settings for scoring and for the deterministic trajectories.
    pub ode: OdeConfig,
}

impl Default for CalibrateConfig {
    fn default() -> Self {
        CalibrateConfig {
            n_samples: 50_000,
            scheme: SamplingScheme::MonteCarlo,
            seed: 20240601,
            scenario_quantiles: [0.025, 0.975],
            ode: OdeConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRun {
    pub samples: Vec<ParameterSet>,
    /// `Q(θ)` per sample; `+inf` where the model failed.
    pub scores: Vec<f64>,
    pub best_index: usize,
    /// Sample indices at the configured score-ranked quantiles.
    pub scenario_indices: [usize; 2],
}

impl CalibrationRun {
    pub fn best_set(&self) -> &ParameterSet {
        &self.samples[self.best_index]
    }

    pub fn best_score(&self) -> f64 {
        self.scores[self.best_index]
    }

    pub fn scenario_sets(&self) -> [&ParameterSet; 2] {
        self.scenario_indices.map(|i| &self.samples[i])
    }

    /// Sample indices ordered by increasing score, ties by index.
    pub fn ranked(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.scores.len()).collect();
        idx.sort_by(|&a, &b| self.scores[a].total_cmp(&self.scores[b]).then(a.cmp(&b)));
        idx
    }

    /// Best-fit parameters laid out as a two-column table.
    pub fn report(&self) -> String {
        let best = self.best_set();
        let mut out = String::new();
        let _ = writeln!(out, "{:<10} {:>14}  description", "parameter", "best fit");
        for id in ParamId::NATURAL_HISTORY {
            let _ = writeln!(out, "{:<10} {:>14.6}  {}", id.name(), best.get(id), id.description());
        }
        let _ = writeln!(out, "Q(best) = {:.3} over {} samples", self.best_score(), self.samples.len());
        out
    }
}

/// Sum of squared differences over every calibration point.
pub fn sse(model: &CalibrationSeries, data: &CalibrationSeries) -> f64 {
    model.points().zip(data.points()).map(|((.., f), (.., y))| (y - f).powi(2)).sum()
}

/// `Q(θ)` with the case-study initial state and default solver settings.
pub fn score(theta: &ParameterSet, data: &CalibrationSeries) -> f64 {
    score_with(theta, data, &CohortState::case_study(), &OdeConfig::default())
}

pub fn score_with(theta: &ParameterSet, data: &CalibrationSeries, init: &CohortState, ode_cfg: &OdeConfig) -> f64 {
    match model_series(theta, init, ode_cfg) {
        Ok(m) => sse(&m, data),
        Err(_) => f64::INFINITY,
    }
}

fn model_series(
    theta: &ParameterSet,
    init: &CohortState,
    ode_cfg: &OdeConfig,
) -> Result<CalibrationSeries, ModelError> {
    theta.validate()?;
    let cfg = OdeConfig { horizon: (CALIBRATION_YEARS - 1) as f64, ..*ode_cfg };
    let sol = ode::integrate(init, theta, &cfg, Intervention::StatusQuo)?;
    Ok(CalibrationSeries::from_trajectory(&sol.trajectory).expect("five yearly snapshots"))
}

/// ODE priors in which the partner-acquisition rates, β and the
/// intervention probabilities are replaced by their closed-form posteriors
/// given the registry and binomial evidence.
pub fn sampling_priors(evidence: &EvidenceData) -> Result<PriorSet, BayesError> {
    sampling_priors_for(&Posterior::case_study(evidence.clone(), Engine::Ode)?)
}

/// As [`sampling_priors`], starting from an arbitrary posterior's priors.
pub fn sampling_priors_for(posterior: &Posterior) -> Result<PriorSet, BayesError> {
    let mut priors = posterior.priors.clone();
    for id in ParamId::ALL {
        priors.set_dist(id, posterior.effective_prior(id))?;
    }
    Ok(priors)
}

/// Draws `n` parameter sets independently, or stratified per parameter
/// under Latin hypercube sampling.
pub fn draw_samples(priors: &PriorSet, n: usize, scheme: SamplingScheme, seed: u64) -> Vec<ParameterSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match scheme {
        SamplingScheme::MonteCarlo => (0..n).map(|_| priors.sample(&mut rng)).collect(),
        SamplingScheme::LatinHypercube => {
            let mut out = vec![ParameterSet::reference(); n];
            for spec in priors.iter() {
                let mut strata: Vec<usize> = (0..n).collect();
                strata.shuffle(&mut rng);
                for (p, k) in out.iter_mut().zip(strata) {
                    let u = (k as f64 + rng.random::<f64>()) / n as f64;
                    p.set(spec.param, spec.dist.quantile(u.clamp(1e-12, 1.0 - 1e-12)));
                }
            }
            out
        }
    }
}

/// Scores the given samples in parallel and picks the best and the
/// scenario sets.
pub fn calibrate_samples(
    samples: Vec<ParameterSet>,
    data: &CalibrationSeries,
    init: &CohortState,
    cfg: &CalibrateConfig,
) -> Result<CalibrationRun, BayesError> {
    if samples.is_empty() {
        return Err(BayesError::InvalidConfig("n_samples must be at least 1".into()));
    }
    let scores: Vec<f64> = samples.par_iter().map(|t| score_with(t, data, init, &cfg.ode)).collect();
    let mut run = CalibrationRun { samples, scores, best_index: 0, scenario_indices: [0, 0] };
    let ranked = run.ranked();
    let n = ranked.len();
    run.best_index = ranked[0];
    run.scenario_indices =
        cfg.scenario_quantiles.map(|q| ranked[(q.clamp(0.0, 1.0) * (n - 1) as f64).round() as usize]);
    Ok(run)
}

pub fn calibrate(
    priors: &PriorSet,
    data: &CalibrationSeries,
    init: &CohortState,
    cfg: &CalibrateConfig,
) -> Result<CalibrationRun, BayesError> {
    cfg.ode.validate()?;
    let samples = draw_samples(priors, cfg.n_samples, cfg.scheme, cfg.seed);
    calibrate_samples(samples, data, init, cfg)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioIcers {
    pub point: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

/// Deterministic costs and QALYs of both arms for one parameter set.
pub fn deterministic_outcome(
    theta: &ParameterSet,
    init: &CohortState,
    ode_cfg: &OdeConfig,
    econ: &EconConfig,
) -> Result<DrawOutcome, ModelError> {
    let cfg = OdeConfig { horizon: econ.horizon.saturating_sub(1) as f64, ..*ode_cfg };
    let sq = ode::integrate(init, theta, &cfg, Intervention::StatusQuo)?.trajectory;
    let vac = ode::integrate(init, theta, &cfg, Intervention::Vaccination)?.trajectory;
    Ok(DrawOutcome::evaluate(theta, &[sq, vac], econ))
}

/// ICERs of the best set and of the two score-ranked scenario sets.
pub fn scenario_quantiles(
    run: &CalibrationRun,
    init: &CohortState,
    ode_cfg: &OdeConfig,
    econ: &EconConfig,
) -> Result<ScenarioIcers, ModelError> {
    let icer = |p: &ParameterSet| -> Result<Option<f64>, ModelError> {
        let o = deterministic_outcome(p, init, ode_cfg, econ)?;
        Ok((o.delta_e() != 0.0).then(|| o.delta_c() / o.delta_e()))
    };
    let [lo, hi] = run.scenario_sets();
    Ok(ScenarioIcers { point: icer(run.best_set())?, lower: icer(lo)?, upper: icer(hi)? })
}

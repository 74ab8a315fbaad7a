use super::evidence::{CalibrationSeries, EvidenceData, PoissonStats, CALIBRATION_YEARS};
use super::prior::{conjugate_posterior_beta, conjugate_posterior_gamma, Dist, PriorSet, UpdateRule};
use crate::engine::{Engine, EngineSettings};
use crate::error::{BayesError, ModelError};
use crate::model::{CohortState, Intervention, ParamId, ParameterSet, Stratum};
use statrs::function::gamma::ln_gamma;

/// Poisson means below this are raised to it before evaluating the
/// calibration likelihood, so an empty compartment cannot produce `ln 0`.
pub const POISSON_FLOOR: f64 = 0.1;

/// Log-probability of `y` under Poisson(`mu`), with `y` allowed to be any
/// nonnegative real.
pub fn ln_poisson(y: f64, mu: f64) -> f64 {
    if y == 0.0 {
        return -mu;
    }
    y * mu.ln() - mu - ln_gamma(y + 1.0)
}

fn ln_binomial(r: u64, n: u64, p: f64) -> f64 {
    let (r, n) = (r as f64, n as f64);
    let ln_choose = ln_gamma(n + 1.0) - ln_gamma(r + 1.0) - ln_gamma(n - r + 1.0);
    let term = |k: f64, q: f64| if k == 0.0 { 0.0 } else { k * q.ln() };
    ln_choose + term(r, p) + term(n - r, 1.0 - p)
}

/// Calibration log-likelihood of observed counts given model counts.
pub fn calibration_log_likelihood(model: &CalibrationSeries, data: &CalibrationSeries) -> f64 {
    model.points().zip(data.points()).map(|(m, d)| ln_poisson(d.3, m.3.max(POISSON_FLOOR))).sum()
}

/// Joint posterior density of a [`ParameterSet`] given the case-study
/// evidence, for a chosen engine.
#[derive(Clone, Debug)]
pub struct Posterior {
    pub priors: PriorSet,
    pub evidence: EvidenceData,
    pub engine: Engine,
    pub settings: EngineSettings,
    pub init: CohortState,
    /// Include the calibration time series; switch off for prior-only runs.
    pub use_calibration: bool,
    registry: [PoissonStats; 4],
}

impl Posterior {
    pub fn new(priors: PriorSet, evidence: EvidenceData, engine: Engine) -> Result<Self, BayesError> {
        evidence.validate()?;
        let registry = std::array::from_fn(|k| PoissonStats::new(&evidence.partner_counts[k]));
        Ok(Posterior {
            priors,
            evidence,
            engine,
            settings: EngineSettings::default(),
            init: CohortState::case_study(),
            use_calibration: true,
            registry,
        })
    }

    pub fn case_study(evidence: EvidenceData, engine: Engine) -> Result<Self, BayesError> {
        Self::new(PriorSet::case_study(engine), evidence, engine)
    }

    fn registry_stratum(id: ParamId) -> Option<Stratum> {
        Stratum::ALL.into_iter().find(|&s| ParamId::omega_for(s) == id)
    }

    /// Log-likelihood of the registry or binomial evidence attached to `id`.
    pub fn ln_evidence(&self, id: ParamId, value: f64) -> f64 {
        if let Some(st) = Self::registry_stratum(id) {
            return self.registry[st.index()].ln_likelihood(value);
        }
        match self.evidence.binomial.get(&id) {
            Some(&(r, n)) if (0.0..=1.0).contains(&value) => ln_binomial(r, n, value),
            Some(_) => f64::NEG_INFINITY,
            None => 0.0,
        }
    }

    /// Closed-form posterior of `id` given only its own evidence, when the
    /// prior is conjugate to it; otherwise the prior itself.
    pub fn effective_prior(&self, id: ParamId) -> Dist {
        let prior = self.priors.get(id).dist;
        if let (Some(st), Dist::Gamma { shape, rate }) = (Self::registry_stratum(id), prior) {
            if !self.evidence.partner_counts[st.index()].is_empty() {
                return conjugate_posterior_gamma(shape, rate, &self.evidence.partner_counts[st.index()])
                    .unwrap_or(prior);
            }
        }
        if let (Some(&(r, n)), Dist::Beta { a, b }) = (self.evidence.binomial.get(&id), prior) {
            return conjugate_posterior_beta(a, b, r, n).unwrap_or(prior);
        }
        prior
    }

    /// Model counts at the calibration points under the status quo.
    pub fn model_series(&self, theta: &ParameterSet) -> Result<CalibrationSeries, ModelError> {
        let traj =
            self.settings.simulate(self.engine, &self.init, theta, CALIBRATION_YEARS - 1, Intervention::StatusQuo)?;
        Ok(CalibrationSeries::from_trajectory(&traj).expect("trajectory covers the calibration years"))
    }

    pub fn ln_calibration(&self, theta: &ParameterSet) -> f64 {
        if !self.use_calibration {
            return 0.0;
        }
        match self.model_series(theta) {
            Ok(m) => calibration_log_likelihood(&m, &self.evidence.calibration),
            Err(_) => f64::NEG_INFINITY,
        }
    }

    /// Full unnormalised log-posterior: priors, registry and binomial
    /// likelihoods, and the calibration likelihood. Out-of-support values
    /// give `-inf`.
    pub fn ln_density(&self, theta: &ParameterSet) -> f64 {
        if theta.validate().is_err() {
            return f64::NEG_INFINITY;
        }
        let mut lp = 0.0;
        for s in self.priors.iter() {
            let v = theta.get(s.param);
            lp += s.dist.ln_pdf(v) + self.ln_evidence(s.param, v);
            if lp == f64::NEG_INFINITY {
                return lp;
            }
        }
        lp + self.ln_calibration(theta)
    }

    /// Terms of [`Self::ln_density`] that involve the Metropolis-updated
    /// parameters; differences of this equal differences of the full
    /// density when only those parameters move.
    pub(crate) fn ln_conditional(&self, theta: &ParameterSet) -> f64 {
        if theta.validate().is_err() {
            return f64::NEG_INFINITY;
        }
        let mut lp = 0.0;
        for s in self.priors.with_rule(UpdateRule::Calibrated) {
            let v = theta.get(s.param);
            lp += s.dist.ln_pdf(v) + self.ln_evidence(s.param, v);
            if lp == f64::NEG_INFINITY {
                return lp;
            }
        }
        lp + self.ln_calibration(theta)
    }
}

/// Log-posterior under the case-study priors of `engine`.
pub fn log_posterior(theta: &ParameterSet, data: &EvidenceData, engine: Engine) -> f64 {
    match Posterior::case_study(data.clone(), engine) {
        Ok(p) => p.ln_density(theta),
        Err(_) => f64::NEG_INFINITY,
    }
}

use crate::error::BayesError;
use crate::model::{HealthState, ParamId, Sex, Stratum, Trajectory};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Number of calibration years.
pub const CALIBRATION_YEARS: usize = 5;

/// Observed counts in the four alive states for the high-risk stratum of
/// each sex, years 1 to 5. Year `t` corresponds to the model snapshot at
/// time `t − 1`, so year 1 is the initial state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSeries {
    /// Indexed `[sex][year − 1][state]`.
    pub counts: [[[f64; 4]; CALIBRATION_YEARS]; 2],
}

impl CalibrationSeries {
    pub fn zeros() -> Self {
        CalibrationSeries { counts: [[[0.0; 4]; CALIBRATION_YEARS]; 2] }
    }

    pub fn get(&self, sex: Sex, year: usize, state: HealthState) -> f64 {
        self.counts[sex.index()][year - 1][state.index()]
    }

    pub fn set(&mut self, sex: Sex, year: usize, state: HealthState, v: f64) {
        self.counts[sex.index()][year - 1][state.index()] = v;
    }

    /// Reads the calibration points off a model trajectory.
    pub fn from_trajectory(traj: &Trajectory) -> Option<Self> {
        if traj.len() < CALIBRATION_YEARS {
            return None;
        }
        let mut out = Self::zeros();
        for sex in Sex::ALL {
            let st = Stratum::new(sex, crate::model::Risk::High);
            for year in 1..=CALIBRATION_YEARS {
                for hs in HealthState::ALIVE {
                    out.set(sex, year, hs, traj.states[year - 1].get(st, hs));
                }
            }
        }
        Some(out)
    }

    /// Iterates `(sex, year, state, count)` over all 40 points.
    pub fn points(&self) -> impl Iterator<Item = (Sex, usize, HealthState, f64)> + '_ {
        Sex::ALL.into_iter().flat_map(move |sex| {
            (1..=CALIBRATION_YEARS).flat_map(move |year| {
                HealthState::ALIVE.into_iter().map(move |hs| (sex, year, hs, self.get(sex, year, hs)))
            })
        })
    }

    pub fn validate(&self) -> Result<(), BayesError> {
        match self.points().find(|p| !(p.3 >= 0.0 && p.3.is_finite())) {
            Some((sex, year, hs, v)) => {
                Err(BayesError::InvalidEvidence(format!("calibration count {sex} {hs} year {year} = {v}")))
            }
            None => Ok(()),
        }
    }
}

/// Everything the Bayesian models are fitted to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvidenceData {
    /// Yearly partner counts per respondent, indexed by stratum.
    pub partner_counts: [Vec<u64>; 4],
    /// `(r, n)` binomial evidence keyed by parameter.
    pub binomial: BTreeMap<ParamId, (u64, u64)>,
    pub calibration: CalibrationSeries,
}

impl EvidenceData {
    /// No data at all: every posterior equals its prior.
    pub fn empty() -> Self {
        EvidenceData {
            partner_counts: Default::default(),
            binomial: BTreeMap::new(),
            calibration: CalibrationSeries::zeros(),
        }
    }

    pub fn validate(&self) -> Result<(), BayesError> {
        for (id, &(r, n)) in &self.binomial {
            if r > n {
                return Err(BayesError::InvalidBinomial { r, n });
            }
            if id.kind() != crate::model::ParamKind::Probability {
                return Err(BayesError::InvalidEvidence(format!("binomial evidence given for non-probability {id}")));
            }
        }
        self.calibration.validate()
    }

    pub fn partner_counts_for(&self, stratum: Stratum) -> &[u64] {
        &self.partner_counts[stratum.index()]
    }
}

/// Sufficient statistics of a Poisson sample, for O(1) likelihood
/// evaluation.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct PoissonStats {
    pub n: f64,
    pub sum: f64,
    pub sum_ln_factorial: f64,
}

impl PoissonStats {
    pub fn new(xs: &[u64]) -> Self {
        let mut s = PoissonStats::default();
        for &x in xs {
            s.n += 1.0;
            s.sum += x as f64;
            s.sum_ln_factorial += statrs::function::gamma::ln_gamma(x as f64 + 1.0);
        }
        s
    }

    pub fn ln_likelihood(&self, rate: f64) -> f64 {
        if self.n == 0.0 {
            return 0.0;
        }
        if rate <= 0.0 {
            return if self.sum == 0.0 { -self.sum_ln_factorial } else { f64::NEG_INFINITY };
        }
        self.sum * rate.ln() - self.n * rate - self.sum_ln_factorial
    }
}

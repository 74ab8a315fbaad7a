//! Random heterosexual mixing between two behaviour groups and the
//! resulting dynamic force of infection.

use crate::error::ModelError;
use crate::model::{CohortState, Intervention, ParameterSet, Risk, Sex, Stratum};

/// Partner-selection probabilities and partner prevalence, per sex of the
/// *partner* (indexed by [`Sex::index`]).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixingContext {
    pub g_high: [f64; 2],
    pub psi_bar: [f64; 2],
}

impl MixingContext {
    pub fn g_low(&self, sex: Sex) -> f64 {
        1.0 - self.g_high[sex.index()]
    }

    /// Builds the context for a cohort snapshot.
    pub fn from_state(state: &CohortState, params: &ParameterSet) -> Result<Self, ModelError> {
        let alive = state.alive_by_stratum();
        let g_high = mixing_probabilities(&params.omega, &alive)?;
        let psi_bar = weighted_prevalence(&g_high, &state.infected_by_stratum(), &alive)?;
        Ok(MixingContext { g_high, psi_bar })
    }
}

fn sex_name(sex: Sex) -> &'static str {
    sex.name()
}

fn high_low(sex: Sex) -> (usize, usize) {
    (Stratum::new(sex, Risk::High).index(), Stratum::new(sex, Risk::Low).index())
}

fn g_high_for(sex: Sex, omega: &[f64; 4], alive: &[f64; 4]) -> Option<f64> {
    let (h, l) = high_low(sex);
    let wh = omega[h] * alive[h];
    let wl = omega[l] * alive[l];
    let denom = wh + wl;
    (denom > 0.0).then(|| wh / denom)
}

/// Probability that a randomly acquired partner of each sex is high-risk,
/// `g_H = ω_H N_H / (ω_H N_H + ω_L N_L)`.
///
/// Fails with [`ModelError::DegeneratePopulation`] when both terms of the
/// denominator vanish for a sex.
pub fn mixing_probabilities(omega: &[f64; 4], alive: &[f64; 4]) -> Result<[f64; 2], ModelError> {
    let mut out = [0.0; 2];
    for sex in Sex::ALL {
        out[sex.index()] =
            g_high_for(sex, omega, alive).ok_or(ModelError::DegeneratePopulation { sex: sex_name(sex) })?;
    }
    Ok(out)
}

fn prevalence_for(sex: Sex, g_high: f64, infected: &[f64; 4], alive: &[f64; 4]) -> Result<f64, ModelError> {
    let (h, l) = high_low(sex);
    let mut psi = 0.0;
    for (g, idx) in [(g_high, h), (1.0 - g_high, l)] {
        if g > 0.0 {
            if alive[idx] <= 0.0 {
                return Err(ModelError::DegeneratePopulation { sex: sex_name(sex) });
            }
            psi += g * infected[idx] / alive[idx];
        }
    }
    Ok(psi)
}

/// Weighted partner prevalence per sex,
/// `ψ̄ = g_H I_H / N_H + g_L I_L / N_L`.
pub fn weighted_prevalence(g_high: &[f64; 2], infected: &[f64; 4], alive: &[f64; 4]) -> Result<[f64; 2], ModelError> {
    let mut out = [0.0; 2];
    for sex in Sex::ALL {
        out[sex.index()] = prevalence_for(sex, g_high[sex.index()], infected, alive)?;
    }
    Ok(out)
}

/// Per-susceptible infection rate (per year), adjusted for vaccination:
/// the covered fraction sees the force reduced by the efficacy, the rest
/// the unadjusted `β ω ψ̄`.
pub fn force_of_infection(beta: f64, omega: f64, psi_bar: f64, coverage: f64, efficacy: f64) -> f64 {
    coverage * (1.0 - efficacy) * beta * omega * psi_bar + (1.0 - coverage) * beta * omega * psi_bar
}

/// `1 - exp(-λ)`, the probability of at least one event in a cycle with a
/// constant rate `λ`.
pub fn rate_to_probability(lambda: f64) -> f64 {
    -(-lambda).exp_m1()
}

/// Force of infection for every stratum of a snapshot.
///
/// A sex with no weighted partner pool exerts no force. That is only an
/// error when the opposite sex still has susceptibles who would need
/// partners.
pub fn forces_of_infection(
    state: &CohortState,
    params: &ParameterSet,
    intervention: Intervention,
) -> Result<[f64; 4], ModelError> {
    let alive = state.alive_by_stratum();
    let infected = state.infected_by_stratum();
    let (coverage, efficacy) = intervention.coverage_efficacy(params);
    let mut psi = [0.0; 2];
    let mut pool = [true; 2];
    for sex in Sex::ALL {
        match g_high_for(sex, &params.omega, &alive) {
            Some(g) => psi[sex.index()] = prevalence_for(sex, g, &infected, &alive)?,
            None => pool[sex.index()] = false,
        }
    }
    let mut out = [0.0; 4];
    for st in Stratum::ALL {
        let partner = st.sex.partner();
        if !pool[partner.index()] {
            if state.get(st, crate::model::HealthState::Susceptible) > 0.0 {
                return Err(ModelError::DegeneratePopulation { sex: sex_name(partner) });
            }
            continue;
        }
        out[st.index()] = force_of_infection(params.beta, params.omega(st), psi[partner.index()], coverage, efficacy);
    }
    Ok(out)
}

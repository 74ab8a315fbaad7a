//! Shared domain model: health states, population strata, interventions,
//! cohort snapshots and the mixing / force-of-infection primitives used by
//! both the ODE and the Markov engines.

mod mixing;
mod params;

pub use mixing::{
    force_of_infection, forces_of_infection, mixing_probabilities, rate_to_probability, weighted_prevalence,
    MixingContext,
};
pub use params::{Costs, ParamId, ParamKind, ParameterSet, Utilities};

use serde::{Deserialize, Serialize};
use std::fmt;

/// The five states of the chronic infection. `Dead` is absorbing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum HealthState {
    Susceptible = 1,
    Infected = 2,
    Asymptomatic = 3,
    Morbid = 4,
    Dead = 5,
}

impl HealthState {
    pub const ALL: [HealthState; 5] = [
        HealthState::Susceptible,
        HealthState::Infected,
        HealthState::Asymptomatic,
        HealthState::Morbid,
        HealthState::Dead,
    ];
    pub const ALIVE: [HealthState; 4] =
        [HealthState::Susceptible, HealthState::Infected, HealthState::Asymptomatic, HealthState::Morbid];

    /// Zero-based position in state vectors.
    pub const fn index(self) -> usize {
        self as usize - 1
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            HealthState::Susceptible => "susceptible",
            HealthState::Infected => "infected",
            HealthState::Asymptomatic => "asymptomatic",
            HealthState::Morbid => "morbid",
            HealthState::Dead => "dead",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|h| h.name().eq_ignore_ascii_case(s.trim()))
    }
}

impl fmt::Display for HealthState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sex {
    Male,
    Female,
}

impl Sex {
    pub const ALL: [Sex; 2] = [Sex::Male, Sex::Female];

    /// Mixing is strictly heterosexual.
    pub const fn partner(self) -> Sex {
        match self {
            Sex::Male => Sex::Female,
            Sex::Female => Sex::Male,
        }
    }

    pub const fn index(self) -> usize {
        match self {
            Sex::Male => 0,
            Sex::Female => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Sex::Male => "male",
            Sex::Female => "female",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "male" | "m" => Some(Sex::Male),
            "female" | "f" => Some(Sex::Female),
            _ => None,
        }
    }
}

impl fmt::Display for Sex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for Risk {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Risk {
    Low,
    High,
}

impl Risk {
    pub const ALL: [Risk; 2] = [Risk::Low, Risk::High];

    pub const fn index(self) -> usize {
        match self {
            Risk::Low => 0,
            Risk::High => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Risk::Low => "low",
            Risk::High => "high",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "low" | "l" => Some(Risk::Low),
            "high" | "h" => Some(Risk::High),
            _ => None,
        }
    }
}

/// One of the four (sex, risk-group) population strata.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Stratum {
    pub sex: Sex,
    pub risk: Risk,
}

impl Stratum {
    pub const MALE_LOW: Stratum = Stratum { sex: Sex::Male, risk: Risk::Low };
    pub const MALE_HIGH: Stratum = Stratum { sex: Sex::Male, risk: Risk::High };
    pub const FEMALE_LOW: Stratum = Stratum { sex: Sex::Female, risk: Risk::Low };
    pub const FEMALE_HIGH: Stratum = Stratum { sex: Sex::Female, risk: Risk::High };

    /// Ordered so that `ALL[s.index()] == s`.
    pub const ALL: [Stratum; 4] = [Stratum::MALE_LOW, Stratum::MALE_HIGH, Stratum::FEMALE_LOW, Stratum::FEMALE_HIGH];

    /// Strata observed by the calibration time series.
    pub const HIGH_RISK: [Stratum; 2] = [Stratum::MALE_HIGH, Stratum::FEMALE_HIGH];

    pub const fn new(sex: Sex, risk: Risk) -> Self {
        Stratum { sex, risk }
    }

    pub const fn index(self) -> usize {
        self.sex.index() * 2 + self.risk.index()
    }

    /// Short label such as `MH` or `FL`.
    pub fn code(self) -> &'static str {
        match (self.sex, self.risk) {
            (Sex::Male, Risk::High) => "MH",
            (Sex::Male, Risk::Low) => "ML",
            (Sex::Female, Risk::High) => "FH",
            (Sex::Female, Risk::Low) => "FL",
        }
    }

    pub fn parse(code: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.code().eq_ignore_ascii_case(code.trim()))
    }
}

impl fmt::Display for Stratum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.sex.name(), self.risk.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Intervention {
    /// Periodic screening, no vaccine.
    StatusQuo,
    Vaccination,
}

impl Intervention {
    pub const ALL: [Intervention; 2] = [Intervention::StatusQuo, Intervention::Vaccination];

    pub fn name(self) -> &'static str {
        match self {
            Intervention::StatusQuo => "status_quo",
            Intervention::Vaccination => "vaccination",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "status_quo" | "statusquo" | "screening" => Some(Intervention::StatusQuo),
            "vaccination" => Some(Intervention::Vaccination),
            _ => None,
        }
    }

    /// Effective (coverage, efficacy) entering the force of infection.
    /// Status quo behaves as full coverage with a useless vaccine.
    pub fn coverage_efficacy(self, params: &ParameterSet) -> (f64, f64) {
        match self {
            Intervention::StatusQuo => (1.0, 0.0),
            Intervention::Vaccination => (params.alpha, params.gamma),
        }
    }
}

impl fmt::Display for Intervention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Persons per health state for one stratum.
pub type StateVector = [f64; 5];

/// Counts of persons per (stratum, health state) at one point in time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CohortState {
    /// Years since the start of follow-up.
    pub time: f64,
    /// Indexed by [`Stratum::index`] then [`HealthState::index`].
    pub counts: [StateVector; 4],
}

impl CohortState {
    pub fn zero() -> Self {
        CohortState { time: 0.0, counts: [[0.0; 5]; 4] }
    }

    /// Initial cohort of the case study: one million persons, 20% high
    /// risk, 50% male, 600 infected spread proportionally.
    pub fn case_study() -> Self {
        let mut s = Self::zero();
        for st in Stratum::ALL {
            let (sus, inf) = match st.risk {
                Risk::Low => (399_760.0, 240.0),
                Risk::High => (99_940.0, 60.0),
            };
            s.counts[st.index()][HealthState::Susceptible.index()] = sus;
            s.counts[st.index()][HealthState::Infected.index()] = inf;
        }
        s
    }

    pub fn get(&self, stratum: Stratum, state: HealthState) -> f64 {
        self.counts[stratum.index()][state.index()]
    }

    pub fn set(&mut self, stratum: Stratum, state: HealthState, value: f64) {
        self.counts[stratum.index()][state.index()] = value;
    }

    /// Persons alive (states 1-4) in a stratum.
    pub fn alive(&self, stratum: Stratum) -> f64 {
        alive(&self.counts[stratum.index()])
    }

    pub fn alive_by_stratum(&self) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (o, c) in out.iter_mut().zip(&self.counts) {
            *o = alive(c);
        }
        out
    }

    pub fn infected_by_stratum(&self) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (o, c) in out.iter_mut().zip(&self.counts) {
            *o = c[HealthState::Infected.index()];
        }
        out
    }

    /// Everyone, including the dead.
    pub fn total(&self) -> f64 {
        self.counts.iter().flatten().sum()
    }

    pub fn total_alive(&self) -> f64 {
        self.counts.iter().map(alive).sum()
    }

    /// Sum over strata of one health state.
    pub fn state_total(&self, state: HealthState) -> f64 {
        self.counts.iter().map(|c| c[state.index()]).sum()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.counts.iter().flatten().all(|&c| c >= 0.0)
    }
}

pub(crate) fn alive(c: &StateVector) -> f64 {
    c[0] + c[1] + c[2] + c[3]
}

/// Time-indexed sequence of cohort snapshots for one intervention.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub intervention: Intervention,
    pub states: Vec<CohortState>,
}

impl Trajectory {
    pub fn new(intervention: Intervention) -> Self {
        Trajectory { intervention, states: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Snapshots that fall on whole years (within 1e-9), in order.
    pub fn yearly(&self) -> Vec<CohortState> {
        self.states.iter().filter(|s| (s.time - s.time.round()).abs() < 1e-9).copied().collect()
    }

    /// Yearly series of one (stratum, state) cell.
    pub fn series(&self, stratum: Stratum, state: HealthState) -> Vec<f64> {
        self.yearly().iter().map(|s| s.get(stratum, state)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stratum_ordering_matches_index() {
        for (i, s) in Stratum::ALL.iter().enumerate() {
            assert_eq!(s.index(), i);
        }
        assert_eq!(Sex::Male.partner(), Sex::Female);
        assert_eq!(Sex::Female.partner(), Sex::Male);
    }

    #[test]
    fn health_state_indices() {
        assert_eq!(HealthState::ALL.len(), 5);
        for (i, h) in HealthState::ALL.iter().enumerate() {
            assert_eq!(h.index(), i);
            assert_eq!(HealthState::from_index(i), Some(*h));
            assert_eq!(HealthState::parse(h.name()), Some(*h));
        }
    }

    #[test]
    fn case_study_population() {
        let s = CohortState::case_study();
        assert_eq!(s.total(), 1_000_000.0);
        assert_eq!(s.state_total(HealthState::Infected), 600.0);
        assert_eq!(s.alive(Stratum::FEMALE_HIGH), 100_000.0);
        assert_eq!(s.get(Stratum::MALE_HIGH, HealthState::Susceptible), 99_940.0);
    }

    #[test]
    fn yearly_filters_sub_annual_points() {
        let mut t = Trajectory::new(Intervention::StatusQuo);
        for k in 0..25 {
            let mut s = CohortState::zero();
            s.time = k as f64 / 12.0;
            t.states.push(s);
        }
        let y = t.yearly();
        assert_eq!(y.len(), 3);
        assert_eq!(y[2].time, 2.0);
    }
}

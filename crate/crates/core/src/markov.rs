//! Discrete-time dynamic Markov cohort.
//!
//! Each cycle the force of infection is recomputed from current prevalence,
//! a 5×5 transition matrix is built per stratum and the cohort is
//! redistributed as `n' = Πᵀ n`, after which births join the susceptible
//! pool. At most one transition happens per cycle, and competing exits from
//! a state are combined additively.
//!
//! Transition and birth parameters are per-year quantities scaled linearly
//! by the cycle length κ; the infection probability is `1 − exp(−λκ)`. At
//! the default κ = 1 the parameters are used unchanged as per-cycle
//! probabilities.

use crate::error::ModelError;
use crate::model::{
    alive, forces_of_infection, rate_to_probability, CohortState, HealthState, Intervention, ParameterSet, Stratum,
    Trajectory,
};
use serde::{Deserialize, Serialize};

/// Row-stochastic matrix; entry `[r][s]` is the probability of moving from
/// state `r + 1` to state `s + 1` within one cycle.
pub type TransitionMatrix = [[f64; 5]; 5];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MarkovConfig {
    pub horizon_cycles: usize,
    /// Cycle length κ in years.
    pub cycle_length: f64,
}

impl Default for MarkovConfig {
    fn default() -> Self {
        MarkovConfig { horizon_cycles: 100, cycle_length: 1.0 }
    }
}

impl MarkovConfig {
    /// Cycles of length `1 / per_year` spanning `years` years.
    pub fn subdivided(years: usize, per_year: usize) -> Self {
        MarkovConfig { horizon_cycles: years * per_year, cycle_length: 1.0 / per_year as f64 }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.horizon_cycles == 0 {
            return Err(ModelError::InvalidConfig("horizon_cycles must be at least 1".into()));
        }
        if !(self.cycle_length > 0.0 && self.cycle_length.is_finite()) {
            return Err(ModelError::InvalidConfig(format!("cycle_length must be positive, got {}", self.cycle_length)));
        }
        Ok(())
    }
}

/// Builds the matrix for one stratum from its infection probability.
pub fn stratum_matrix(
    pi_12: f64,
    params: &ParameterSet,
    kappa: f64,
    cycle: usize,
    stratum: Stratum,
) -> Result<TransitionMatrix, ModelError> {
    let p15 = params.trans_1_5 * kappa;
    let p23 = params.trans_2_3 * kappa;
    let p34 = params.trans_3_4 * kappa;
    let p45 = params.trans_4_5 * kappa;
    let exits = [
        (pi_12 + p15, HealthState::Susceptible),
        (p23 + p15, HealthState::Infected),
        (p34 + p15, HealthState::Asymptomatic),
        (p45 + p15, HealthState::Morbid),
    ];
    for (sum, state) in exits {
        if sum > 1.0 + 1e-12 {
            return Err(ModelError::ProbabilityOverflow {
                cycle,
                stratum: stratum.to_string(),
                state: state.name(),
                sum,
            });
        }
    }
    Ok([
        [1.0 - pi_12 - p15, pi_12, 0.0, 0.0, p15],
        [0.0, 1.0 - p23 - p15, p23, 0.0, p15],
        [0.0, 0.0, 1.0 - p34 - p15, p34, p15],
        [0.0, 0.0, 0.0, 1.0 - p45 - p15, p45 + p15],
        [0.0, 0.0, 0.0, 0.0, 1.0],
    ])
}

/// Matrices for every stratum at the current state of the cohort.
pub fn build_matrix(
    state: &CohortState,
    params: &ParameterSet,
    intervention: Intervention,
    cycle: usize,
    kappa: f64,
) -> Result<[TransitionMatrix; 4], ModelError> {
    let lambda = forces_of_infection(state, params, intervention)?;
    matrices_from_forces(&lambda, params, cycle, kappa)
}

fn matrices_from_forces(
    lambda: &[f64; 4],
    params: &ParameterSet,
    cycle: usize,
    kappa: f64,
) -> Result<[TransitionMatrix; 4], ModelError> {
    let mut out = [[[0.0; 5]; 5]; 4];
    for st in Stratum::ALL {
        let pi = rate_to_probability(lambda[st.index()] * kappa);
        out[st.index()] = stratum_matrix(pi, params, kappa, cycle, st)?;
    }
    Ok(out)
}

/// One cycle of state allocation followed by births.
pub fn step(state: &CohortState, matrices: &[TransitionMatrix; 4], params: &ParameterSet, kappa: f64) -> CohortState {
    let mut next = CohortState { time: state.time + kappa, counts: [[0.0; 5]; 4] };
    for st in Stratum::ALL {
        let k = st.index();
        let n = &state.counts[k];
        let m = &matrices[k];
        for (s, out) in next.counts[k].iter_mut().enumerate() {
            *out = (0..5).map(|r| n[r] * m[r][s]).sum();
        }
        next.counts[k][0] += params.chi * kappa * alive(n);
    }
    next
}

/// Simulates `cfg.horizon_cycles` cycles, returning the initial state and
/// every subsequent one.
pub fn run(
    init: &CohortState,
    params: &ParameterSet,
    cfg: &MarkovConfig,
    intervention: Intervention,
) -> Result<Trajectory, ModelError> {
    simulate(init, params, cfg, intervention, false)
}

/// Like [`run`], but the force of infection is frozen at its initial value,
/// so vaccination gives no indirect protection.
pub fn run_static(
    init: &CohortState,
    params: &ParameterSet,
    cfg: &MarkovConfig,
    intervention: Intervention,
) -> Result<Trajectory, ModelError> {
    simulate(init, params, cfg, intervention, true)
}

fn simulate(
    init: &CohortState,
    params: &ParameterSet,
    cfg: &MarkovConfig,
    intervention: Intervention,
    frozen: bool,
) -> Result<Trajectory, ModelError> {
    cfg.validate()?;
    let kappa = cfg.cycle_length;
    let initial_lambda = forces_of_infection(init, params, intervention)?;
    let mut traj = Trajectory::new(intervention);
    traj.states.reserve(cfg.horizon_cycles + 1);
    traj.states.push(*init);
    let mut cur = *init;
    for cycle in 0..cfg.horizon_cycles {
        let lambda = if frozen { initial_lambda } else { forces_of_infection(&cur, params, intervention)? };
        let m = matrices_from_forces(&lambda, params, cycle, kappa)?;
        let mut next = step(&cur, &m, params, kappa);
        // Keep report times on the exact grid.
        next.time = init.time + (cycle + 1) as f64 * kappa;
        traj.states.push(next);
        cur = next;
    }
    Ok(traj)
}

/// Cumulative new infections (S → I flows) up to each cycle, summed over
/// strata. Element 0 is zero.
pub fn cumulative_infections(
    traj: &Trajectory,
    params: &ParameterSet,
    cfg: &MarkovConfig,
    frozen: bool,
) -> Result<Vec<f64>, ModelError> {
    let mut out = vec![0.0; traj.len()];
    let Some(first) = traj.states.first() else { return Ok(out) };
    let initial = forces_of_infection(first, params, traj.intervention)?;
    for (c, s) in traj.states.iter().enumerate().take(traj.len().saturating_sub(1)) {
        let lambda = if frozen { initial } else { forces_of_infection(s, params, traj.intervention)? };
        let new: f64 = Stratum::ALL
            .iter()
            .map(|st| rate_to_probability(lambda[st.index()] * cfg.cycle_length) * s.get(*st, HealthState::Susceptible))
            .sum();
        out[c + 1] = out[c] + new;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn susceptible_row_example() {
        let mut p = ParameterSet::reference();
        p.trans_1_5 = 0.01;
        let m = stratum_matrix(0.10, &p, 1.0, 0, Stratum::FEMALE_HIGH).unwrap();
        let mut s = CohortState::zero();
        s.counts[3] = [100.0, 0.0, 0.0, 0.0, 0.0];
        p.chi = 0.0;
        let mut ms = [[[0.0; 5]; 5]; 4];
        ms[3] = m;
        let next = step(&s, &ms, &p, 1.0);
        let expect = [89.0, 10.0, 0.0, 0.0, 1.0];
        for (a, b) in next.counts[3].iter().zip(expect) {
            assert_relative_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn infected_row_example() {
        let p = ParameterSet::reference();
        let m = stratum_matrix(0.0, &p, 1.0, 0, Stratum::MALE_LOW).unwrap();
        assert_relative_eq!(m[1][1], 0.1995, epsilon = 1e-12);
        assert_eq!(m[1][2], 0.80);
        assert_eq!(m[1][4], 0.0005);
    }

    #[test]
    fn overflow_reports_cycle() {
        let mut p = ParameterSet::reference();
        p.trans_2_3 = 0.9;
        p.trans_1_5 = 0.2;
        let err = stratum_matrix(0.0, &p, 1.0, 7, Stratum::MALE_LOW).unwrap_err();
        match err {
            ModelError::ProbabilityOverflow { cycle, state, .. } => {
                assert_eq!(cycle, 7);
                assert_eq!(state, "infected");
            }
            e => panic!("{e:?}"),
        }
        let cfg = MarkovConfig { horizon_cycles: 3, cycle_length: 2.0 };
        let err =
            run(&CohortState::case_study(), &ParameterSet::reference(), &cfg, Intervention::StatusQuo).unwrap_err();
        assert!(matches!(err, ModelError::ProbabilityOverflow { cycle: 0, .. }));
    }

    #[test]
    fn beta_zero_no_infected_inflow() {
        let mut p = ParameterSet::reference();
        p.beta = 0.0;
        let t = run(&CohortState::case_study(), &p, &MarkovConfig::default(), Intervention::StatusQuo).unwrap();
        for st in Stratum::ALL {
            let inf = t.series(st, HealthState::Infected);
            for w in inf.windows(2) {
                assert_relative_eq!(w[1], w[0] * (1.0 - p.trans_2_3 - p.trans_1_5), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn one_cycle_is_one_step() {
        let init = CohortState::case_study();
        let p = ParameterSet::reference();
        let cfg = MarkovConfig { horizon_cycles: 1, cycle_length: 1.0 };
        let t = run(&init, &p, &cfg, Intervention::Vaccination).unwrap();
        let m = build_matrix(&init, &p, Intervention::Vaccination, 0, 1.0).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.states[1], step(&init, &m, &p, 1.0));
    }

    #[test]
    fn herd_immunity_dominance() {
        let init = CohortState::case_study();
        let p = ParameterSet::reference();
        let cfg = MarkovConfig::default();
        let dynamic = run(&init, &p, &cfg, Intervention::Vaccination).unwrap();
        let frozen = run_static(&init, &p, &cfg, Intervention::Vaccination).unwrap();
        let cd = cumulative_infections(&dynamic, &p, &cfg, false).unwrap();
        let cs = cumulative_infections(&frozen, &p, &cfg, true).unwrap();
        for (d, s) in cd.iter().zip(&cs) {
            assert!(s + 1e-9 >= *d, "static {s} < dynamic {d}");
        }
        assert!(cs[100] > cd[100]);
    }

    #[test]
    fn vaccination_lowers_prevalence() {
        let init = CohortState::case_study();
        let p = ParameterSet::reference();
        let cfg = MarkovConfig::default();
        let sq = run(&init, &p, &cfg, Intervention::StatusQuo).unwrap();
        let vac = run(&init, &p, &cfg, Intervention::Vaccination).unwrap();
        for t in 1..=100 {
            assert!(vac.states[t].state_total(HealthState::Infected) < sq.states[t].state_total(HealthState::Infected));
        }
    }

    fn arb_params() -> impl Strategy<Value = ParameterSet> {
        (0.0..0.5f64, 0.0..0.5f64, 0.0..0.9f64, 0.0..0.5f64, 0.0..0.5f64, 0.0..0.01f64, 0.0..1.0f64, 0.0..1.0f64)
            .prop_map(|(chi, beta, t23, t34, t45, t15, alpha, gamma)| ParameterSet {
                chi,
                beta,
                trans_2_3: t23,
                trans_3_4: t34,
                trans_4_5: t45,
                trans_1_5: t15,
                alpha,
                gamma,
                ..ParameterSet::reference()
            })
    }

    proptest! {
        #[test]
        fn rows_are_stochastic(p in arb_params(), frac in 0.0..0.2f64, vac in any::<bool>()) {
            let mut s = CohortState::case_study();
            for st in Stratum::ALL {
                let n = s.alive(st);
                s.set(st, HealthState::Susceptible, n * (1.0 - frac));
                s.set(st, HealthState::Infected, n * frac);
            }
            let iv = if vac { Intervention::Vaccination } else { Intervention::StatusQuo };
            let ms = build_matrix(&s, &p, iv, 0, 1.0).unwrap();
            for m in &ms {
                for row in m {
                    prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
                    prop_assert!(row.iter().all(|&x| (0.0..=1.0).contains(&x)));
                }
            }
        }

        #[test]
        fn conservation(p in arb_params()) {
            let cfg = MarkovConfig { horizon_cycles: 30, cycle_length: 1.0 };
            let t = run(&CohortState::case_study(), &p, &cfg, Intervention::StatusQuo).unwrap();
            let mut expected = t.states[0].total();
            for w in t.states.windows(2) {
                expected += p.chi * w[0].total_alive();
                prop_assert!((w[1].total() - expected).abs() <= 1e-12 * expected);
                prop_assert!(w[1].is_nonnegative());
            }
        }
    }
}

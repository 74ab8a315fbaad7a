//! Discounted costs and QALYs over model trajectories, ICER, CEAC and
//! EVPI.
//!
//! Cost accrual rules:
//! * status quo, every `screening_interval` years starting at the first
//!   time point: a fraction σ of the undiagnosed alive (Susceptible,
//!   Infected, Asymptomatic) are screened at `c_screen`; screened infected
//!   see a GP and take a test (`c_gp + c_test`); the fraction η of those
//!   diagnosed get a blood test and treatment (`c_blood + c_treat`);
//! * vaccination, every `vaccination_interval` years: a fraction α of
//!   susceptibles are vaccinated at `c_vac`; people progressing to Morbid
//!   are diagnosed symptomatically each year at `c_gp + c_blood + c_treat`;
//! * both arms: Morbid accrue `c_dis` per year; Dead accrue nothing.

use crate::bayes::PosteriorDraws;
use crate::error::EconError;
use crate::model::{CohortState, HealthState, Intervention, ParameterSet, Stratum, Trajectory};
use crate::stats;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WtpGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Default for WtpGrid {
    fn default() -> Self {
        WtpGrid { start: 0.0, stop: 50_000.0, step: 100.0 }
    }
}

impl WtpGrid {
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

/// Switches on the cost rules that are not fixed by the model description.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostSchedule {
    /// Screen every alive person rather than only the undiagnosed.
    pub screen_all_alive: bool,
    /// Charge symptomatic diagnosis at Morbid entry under the status quo
    /// as well.
    pub symptomatic_diagnosis_status_quo: bool,
    /// Per-time-point multiplier on all unit costs; missing entries are 1.
    pub cost_multiplier: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EconConfig {
    pub discount_rate: f64,
    pub wtp: WtpGrid,
    pub wtp_reference: f64,
    /// Number of yearly time points T; point `t` is the snapshot at year
    /// `t − 1`.
    pub horizon: usize,
    pub screening_interval: usize,
    pub vaccination_interval: usize,
    pub population_multiplier: f64,
    pub schedule: CostSchedule,
}

impl Default for EconConfig {
    fn default() -> Self {
        EconConfig {
            discount_rate: 0.03,
            wtp: WtpGrid::default(),
            wtp_reference: 25_000.0,
            horizon: 100,
            screening_interval: 5,
            vaccination_interval: 5,
            population_multiplier: 1_000_000.0,
            schedule: CostSchedule::default(),
        }
    }
}

impl EconConfig {
    pub fn validate(&self) -> Result<(), EconError> {
        let bad = |m: String| Err(EconError::InvalidConfig(m));
        if !(self.discount_rate >= 0.0 && self.discount_rate.is_finite()) {
            return bad(format!("discount_rate must be >= 0, got {}", self.discount_rate));
        }
        if !(self.wtp.step > 0.0 && self.wtp.stop >= self.wtp.start) {
            return bad(format!("willingness-to-pay grid must be increasing: {:?}", self.wtp));
        }
        if self.screening_interval == 0 || self.vaccination_interval == 0 {
            return bad("intervention intervals must be at least 1 year".into());
        }
        if self.horizon == 0 {
            return bad("horizon must be at least 1".into());
        }
        if self.population_multiplier.is_nan() || self.population_multiplier <= 0.0 {
            return bad(format!("population_multiplier must be positive, got {}", self.population_multiplier));
        }
        Ok(())
    }

    pub fn discount(&self, index: usize) -> f64 {
        (1.0 + self.discount_rate).powi(-(index as i32))
    }
}

/// Undiscounted cost incurred at one time point.
pub fn cost_at(
    state: &CohortState,
    index: usize,
    p: &ParameterSet,
    cfg: &EconConfig,
    intervention: Intervention,
) -> f64 {
    let c = &p.costs;
    let total = |hs| state.state_total(hs);
    let (s, i, a, m) = (
        total(HealthState::Susceptible),
        total(HealthState::Infected),
        total(HealthState::Asymptomatic),
        total(HealthState::Morbid),
    );
    let symptomatic = p.trans_3_4 * a * (c.gp + c.blood + c.treat);
    let mut cost = m * c.dis;
    match intervention {
        Intervention::StatusQuo => {
            if index.is_multiple_of(cfg.screening_interval) {
                let pool = if cfg.schedule.screen_all_alive { s + i + a + m } else { s + i + a };
                let screened_infected = p.sigma * (i + a);
                cost += p.sigma * pool * c.screen
                    + screened_infected * (c.gp + c.test)
                    + p.eta * screened_infected * (c.blood + c.treat);
            }
            if cfg.schedule.symptomatic_diagnosis_status_quo {
                cost += symptomatic;
            }
        }
        Intervention::Vaccination => {
            if index.is_multiple_of(cfg.vaccination_interval) {
                cost += p.alpha * s * c.vac;
            }
            cost += symptomatic;
        }
    }
    cost * cfg.schedule.cost_multiplier.get(index).copied().unwrap_or(1.0)
}

pub fn utility_at(state: &CohortState, p: &ParameterSet) -> f64 {
    let u = p.utilities.by_state();
    Stratum::ALL.iter().map(|st| (0..5).map(|k| u[k] * state.counts[st.index()][k]).sum::<f64>()).sum()
}

/// Discounted total cost and QALYs over the first `cfg.horizon` yearly
/// snapshots of `traj`.
pub fn accrue(traj: &Trajectory, params: &ParameterSet, cfg: &EconConfig, intervention: Intervention) -> (f64, f64) {
    let yearly = traj.yearly();
    let mut cost = 0.0;
    let mut util = 0.0;
    for (index, state) in yearly.iter().take(cfg.horizon).enumerate() {
        let d = cfg.discount(index);
        cost += d * cost_at(state, index, params, cfg, intervention);
        util += d * utility_at(state, params);
    }
    (cost, util)
}

/// Costs and QALYs of both arms for one parameter draw; index 0 is the
/// status quo, 1 vaccination.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DrawOutcome {
    pub cost: [f64; 2],
    pub utility: [f64; 2],
}

impl DrawOutcome {
    pub fn evaluate(params: &ParameterSet, trajectories: &[Trajectory; 2], cfg: &EconConfig) -> Self {
        let (c1, u1) = accrue(&trajectories[0], params, cfg, Intervention::StatusQuo);
        let (c2, u2) = accrue(&trajectories[1], params, cfg, Intervention::Vaccination);
        DrawOutcome { cost: [c1, c2], utility: [u1, u2] }
    }

    pub fn delta_c(&self) -> f64 {
        self.cost[1] - self.cost[0]
    }

    pub fn delta_e(&self) -> f64 {
        self.utility[1] - self.utility[0]
    }

    pub fn net_benefit(&self, k: f64) -> [f64; 2] {
        [k * self.utility[0] - self.cost[0], k * self.utility[1] - self.cost[1]]
    }
}

/// Ratio of mean incremental cost to mean incremental effect.
pub fn icer(delta_c: &[f64], delta_e: &[f64]) -> Result<f64, EconError> {
    if delta_c.is_empty() {
        return Err(EconError::TooFewDraws { needed: 1, got: 0 });
    }
    let de = stats::mean(delta_e);
    if de == 0.0 {
        return Err(EconError::UndefinedIcer);
    }
    Ok(stats::mean(delta_c) / de)
}

/// Share of draws in which vaccination has positive incremental net
/// benefit at willingness to pay `k`.
pub fn ceac_at(delta_c: &[f64], delta_e: &[f64], k: f64) -> f64 {
    let n = delta_c.len();
    if n == 0 {
        return f64::NAN;
    }
    delta_c.iter().zip(delta_e).filter(|(c, e)| k * **e - **c > 0.0).count() as f64 / n as f64
}

pub fn ceac(delta_c: &[f64], delta_e: &[f64], grid: &[f64]) -> Vec<f64> {
    grid.iter().map(|&k| ceac_at(delta_c, delta_e, k)).collect()
}

/// `E[max_i NB_i] − max_i E[NB_i]` over per-draw net benefits.
pub fn evpi(net_benefits: &[[f64; 2]]) -> Result<f64, EconError> {
    let n = net_benefits.len();
    if n < 2 {
        return Err(EconError::TooFewDraws { needed: 2, got: n });
    }
    let nf = n as f64;
    let expected_max = net_benefits.iter().map(|nb| nb[0].max(nb[1])).sum::<f64>() / nf;
    let m0 = net_benefits.iter().map(|nb| nb[0]).sum::<f64>() / nf;
    let m1 = net_benefits.iter().map(|nb| nb[1]).sum::<f64>() / nf;
    Ok((expected_max - m0.max(m1)).max(0.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvpiPoint {
    pub k: f64,
    pub per_person: f64,
    pub population: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CeaResult {
    pub outcomes: Vec<DrawOutcome>,
    pub delta_c: Vec<f64>,
    pub delta_e: Vec<f64>,
    pub mean_delta_c: f64,
    pub mean_delta_e: f64,
    pub icer: Option<f64>,
    pub wtp: Vec<f64>,
    pub ceac: Vec<f64>,
    pub evpi: Vec<EvpiPoint>,
    pub wtp_reference: f64,
}

impl CeaResult {
    /// Summarises per-draw outcomes. `cohort_size` converts whole-cohort
    /// net benefits into per-person values, which `population_multiplier`
    /// then scales back up.
    pub fn from_outcomes(outcomes: Vec<DrawOutcome>, cfg: &EconConfig, cohort_size: f64) -> Result<Self, EconError> {
        cfg.validate()?;
        if outcomes.len() < 2 {
            return Err(EconError::TooFewDraws { needed: 2, got: outcomes.len() });
        }
        let delta_c: Vec<f64> = outcomes.iter().map(DrawOutcome::delta_c).collect();
        let delta_e: Vec<f64> = outcomes.iter().map(DrawOutcome::delta_e).collect();
        let icer = icer(&delta_c, &delta_e).ok();
        let wtp = cfg.wtp.values();
        let ceac = ceac(&delta_c, &delta_e, &wtp);
        let evpi = wtp
            .iter()
            .map(|&k| {
                let nbs: Vec<[f64; 2]> = outcomes.iter().map(|o| o.net_benefit(k)).collect();
                let total = evpi(&nbs)?;
                let per_person = total / cohort_size;
                Ok(EvpiPoint { k, per_person, population: per_person * cfg.population_multiplier })
            })
            .collect::<Result<Vec<_>, EconError>>()?;
        Ok(CeaResult {
            mean_delta_c: stats::mean(&delta_c),
            mean_delta_e: stats::mean(&delta_e),
            outcomes,
            delta_c,
            delta_e,
            icer,
            wtp,
            ceac,
            evpi,
            wtp_reference: cfg.wtp_reference,
        })
    }

    pub fn ceac_at(&self, k: f64) -> f64 {
        ceac_at(&self.delta_c, &self.delta_e, k)
    }

    pub fn evpi_at(&self, k: f64) -> Option<EvpiPoint> {
        self.evpi.iter().min_by(|a, b| (a.k - k).abs().total_cmp(&(b.k - k).abs())).copied()
    }

    pub fn peak_evpi(&self) -> Option<EvpiPoint> {
        self.evpi.iter().max_by(|a, b| a.population.total_cmp(&b.population)).copied()
    }

    /// Fraction of draws with Δe > 0, Δc > 0 and positive incremental net
    /// benefit at `k`.
    pub fn share_upper_right_cost_effective(&self, k: f64) -> f64 {
        let n = self.delta_c.len() as f64;
        self.delta_c.iter().zip(&self.delta_e).filter(|(c, e)| **e > 0.0 && **c > 0.0 && k * **e - **c > 0.0).count()
            as f64
            / n
    }
}

/// Probabilistic sensitivity analysis over posterior draws whose
/// trajectories have been attached.
pub fn psa(draws: &PosteriorDraws, cfg: &EconConfig, cohort_size: f64) -> Result<CeaResult, EconError> {
    if draws.trajectories.len() != draws.draws.len() {
        return Err(EconError::InvalidConfig("posterior draws carry no trajectories".into()));
    }
    let outcomes: Vec<DrawOutcome> = draws
        .draws
        .par_iter()
        .zip(draws.trajectories.par_iter())
        .map(|(p, t)| DrawOutcome::evaluate(p, t, cfg))
        .collect();
    CeaResult::from_outcomes(outcomes, cfg, cohort_size)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn zero_costs(mut p: ParameterSet) -> ParameterSet {
        p.costs = crate::model::Costs { screen: 0.0, vac: 0.0, test: 0.0, blood: 0.0, treat: 0.0, dis: 0.0, gp: 0.0 };
        p
    }

    fn flat_trajectory(n: usize, f: impl Fn(usize) -> CohortState) -> Trajectory {
        Trajectory {
            intervention: Intervention::StatusQuo,
            states: (0..n)
                .map(|t| {
                    let mut s = f(t);
                    s.time = t as f64;
                    s
                })
                .collect(),
        }
    }

    #[test]
    fn undiscounted_utility_example() {
        let traj = flat_trajectory(3, |_| {
            let mut s = CohortState::zero();
            s.set(Stratum::MALE_LOW, HealthState::Susceptible, 100.0);
            s
        });
        let cfg = EconConfig { discount_rate: 0.0, ..EconConfig::default() };
        let (c, u) = accrue(&traj, &zero_costs(ParameterSet::reference()), &cfg, Intervention::StatusQuo);
        assert_eq!(u, 300.0);
        assert_eq!(c, 0.0);
    }

    #[test]
    fn discounted_cash_flow_example() {
        let traj = flat_trajectory(5, |t| {
            let mut s = CohortState::zero();
            if t == 2 {
                s.set(Stratum::FEMALE_HIGH, HealthState::Morbid, 1.0);
            }
            s
        });
        let mut p = zero_costs(ParameterSet::reference());
        p.costs.dis = 100.0;
        let (c, _) = accrue(&traj, &p, &EconConfig::default(), Intervention::Vaccination);
        assert_relative_eq!(c, 94.2596, epsilon = 1e-4);
    }

    #[test]
    fn schedule_cadence() {
        let s = CohortState::case_study();
        let p = ParameterSet::reference();
        let cfg = EconConfig::default();
        let sq: Vec<f64> = (0..11).map(|t| cost_at(&s, t, &p, &cfg, Intervention::StatusQuo)).collect();
        assert!(sq[0] > 0.0 && sq[5] > 0.0 && sq[10] > 0.0);
        assert_eq!(sq[1], 0.0);
        let undiagnosed = s.total_alive() - s.state_total(HealthState::Morbid);
        let infected = s.state_total(HealthState::Infected) + s.state_total(HealthState::Asymptomatic);
        assert!(infected > 0.0);
        let expect = 0.9 * undiagnosed * p.costs.screen
            + 0.9 * infected * (p.costs.gp + p.costs.test)
            + 0.9 * 0.9 * infected * (p.costs.blood + p.costs.treat);
        assert_relative_eq!(sq[0], expect, max_relative = 1e-12);
        let vac0 = cost_at(&s, 0, &p, &cfg, Intervention::Vaccination);
        assert_relative_eq!(vac0, 0.9 * s.state_total(HealthState::Susceptible) * p.costs.vac, max_relative = 1e-12);
        assert_eq!(cost_at(&s, 3, &p, &cfg, Intervention::Vaccination), 0.0);
    }

    #[test]
    fn cost_multiplier_hook() {
        let s = CohortState::case_study();
        let p = ParameterSet::reference();
        let mut cfg = EconConfig::default();
        let base = cost_at(&s, 0, &p, &cfg, Intervention::StatusQuo);
        cfg.schedule.cost_multiplier = vec![2.0];
        assert_relative_eq!(cost_at(&s, 0, &p, &cfg, Intervention::StatusQuo), 2.0 * base);
    }

    #[test]
    fn icer_examples() {
        assert_relative_eq!(icer(&[100.0; 4], &[0.02; 4]).unwrap(), 5000.0, max_relative = 1e-12);
        assert_eq!(icer(&[0.0; 3], &[0.5; 3]).unwrap(), 0.0);
        assert!(matches!(icer(&[1.0, 2.0], &[1.0, -1.0]), Err(EconError::UndefinedIcer)));
        // ratio of means, not mean of ratios
        assert_relative_eq!(icer(&[1.0, 3.0], &[1.0, 3.0]).unwrap(), 1.0);
        assert_relative_eq!(icer(&[2.0, 2.0], &[1.0, 3.0]).unwrap(), 1.0);
    }

    #[test]
    fn evpi_examples() {
        assert_eq!(evpi(&[[10.0, 0.0], [0.0, 10.0]]).unwrap(), 5.0);
        assert_eq!(evpi(&[[10.0, 0.0], [5.0, 1.0]]).unwrap(), 0.0);
        assert!(evpi(&[[1.0, 2.0]]).is_err());
    }

    #[test]
    fn ceac_examples() {
        let dc = [-1.0, -5.0];
        let de = [0.1, 0.2];
        assert!(ceac(&dc, &de, &[0.0, 100.0, 1e6]).iter().all(|&p| p == 1.0));
        assert_eq!(ceac_at(&[1.0, 2.0], &[0.1, 0.1], 0.0), 0.0);
    }

    #[test]
    fn wtp_grid_values() {
        let v = WtpGrid::default().values();
        assert_eq!(v.len(), 501);
        assert_eq!(v[250], 25_000.0);
        assert_eq!(*v.last().unwrap(), 50_000.0);
    }

    fn arb_outcomes() -> impl Strategy<Value = Vec<DrawOutcome>> {
        prop::collection::vec(
            (0.0..1e6f64, -1e5..1e6f64, 0.0..1e3f64, 0.001..10.0f64)
                .prop_map(|(c1, dc, u1, de)| DrawOutcome { cost: [c1, c1 + dc], utility: [u1, u1 + de] }),
            2..60,
        )
    }

    proptest! {
        #[test]
        fn ceac_monotone_with_positive_effects(o in arb_outcomes()) {
            let dc: Vec<f64> = o.iter().map(|d| d.delta_c()).collect();
            let de: Vec<f64> = o.iter().map(|d| d.delta_e()).collect();
            let grid = WtpGrid { start: 0.0, stop: 1e6, step: 1e3 }.values();
            let curve = ceac(&dc, &de, &grid);
            prop_assert!(curve.windows(2).all(|w| w[1] >= w[0]));
            prop_assert!(curve.iter().all(|p| (0.0..=1.0).contains(p)));
        }

        #[test]
        fn ceac_crosses_half_near_median_ratio(o in arb_outcomes()) {
            let dc: Vec<f64> = o.iter().map(|d| d.delta_c()).collect();
            let de: Vec<f64> = o.iter().map(|d| d.delta_e()).collect();
            let ratios: Vec<f64> = dc.iter().zip(&de).map(|(c, e)| c / e).collect();
            let lo = stats::quantile(&ratios, 0.5);
            // just below the lower median at most half are cost-effective,
            // just above the upper median at least half are
            let mut sorted = ratios.clone();
            sorted.sort_by(f64::total_cmp);
            let n = sorted.len();
            let (m_lo, m_hi) = (sorted[(n - 1) / 2], sorted[n / 2]);
            prop_assert!(ceac_at(&dc, &de, m_lo - 1e-6 * m_lo.abs().max(1.0)) <= 0.5 + 1e-12);
            prop_assert!(ceac_at(&dc, &de, m_hi + 1e-6 * m_hi.abs().max(1.0)) >= 0.5 - 1e-12);
            prop_assert!(lo >= m_lo && lo <= m_hi);
        }

        #[test]
        fn evpi_nonnegative_and_zero_iff_dominance(o in arb_outcomes(), k in 0.0..1e5f64) {
            let nbs: Vec<[f64; 2]> = o.iter().map(|d| d.net_benefit(k)).collect();
            let v = evpi(&nbs).unwrap();
            prop_assert!(v >= 0.0);
            let all0 = nbs.iter().all(|nb| nb[0] >= nb[1]);
            let all1 = nbs.iter().all(|nb| nb[1] >= nb[0]);
            let scale = nbs.iter().flatten().map(|x| x.abs()).fold(1.0, f64::max);
            if all0 || all1 {
                prop_assert!(v <= 1e-12 * scale);
            } else {
                prop_assert!(v > 0.0);
            }
        }

        #[test]
        fn cost_scaling(o in arb_outcomes(), s in 0.1..10.0f64) {
            let scaled: Vec<DrawOutcome> = o.iter().map(|d| DrawOutcome { cost: [d.cost[0] * s, d.cost[1] * s], ..*d }).collect();
            let dc: Vec<f64> = o.iter().map(|d| d.delta_c()).collect();
            let de: Vec<f64> = o.iter().map(|d| d.delta_e()).collect();
            let dcs: Vec<f64> = scaled.iter().map(|d| d.delta_c()).collect();
            let i0 = icer(&dc, &de).unwrap();
            let i1 = icer(&dcs, &de).unwrap();
            prop_assert!((i1 - s * i0).abs() <= 1e-9 * i1.abs().max(1.0));
            let k = 2e4;
            let e0 = evpi(&o.iter().map(|d| d.net_benefit(k)).collect::<Vec<_>>()).unwrap();
            let e1 = evpi(&scaled.iter().map(|d| d.net_benefit(k * s)).collect::<Vec<_>>()).unwrap();
            prop_assert!((e1 - s * e0).abs() <= 1e-6 * (e1.abs() + 1.0));
        }

        #[test]
        fn accrue_is_linear(f in 0.5..3.0f64) {
            let base = CohortState::case_study();
            let traj = flat_trajectory(12, |_| base);
            let doubled = flat_trajectory(12, |_| {
                let mut s = base;
                s.counts.iter_mut().flatten().for_each(|x| *x *= f);
                s
            });
            let p = ParameterSet::reference();
            let cfg = EconConfig::default();
            for iv in Intervention::ALL {
                let (c1, u1) = accrue(&traj, &p, &cfg, iv);
                let (c2, u2) = accrue(&doubled, &p, &cfg, iv);
                prop_assert!((c2 - f * c1).abs() <= 1e-9 * c2);
                prop_assert!((u2 - f * u1).abs() <= 1e-9 * u2);
            }
        }
    }

    #[test]
    fn cea_result_summary() {
        let outcomes = vec![
            DrawOutcome { cost: [0.0, 100.0], utility: [0.0, 0.02] },
            DrawOutcome { cost: [0.0, 100.0], utility: [0.0, 0.02] },
        ];
        let r = CeaResult::from_outcomes(outcomes, &EconConfig::default(), 1.0).unwrap();
        assert_relative_eq!(r.icer.unwrap(), 5000.0, max_relative = 1e-12);
        assert_eq!(r.ceac_at(4000.0), 0.0);
        assert_eq!(r.ceac_at(6000.0), 1.0);
        assert_eq!(r.peak_evpi().unwrap().population, 0.0);
        assert_eq!(r.share_upper_right_cost_effective(25_000.0), 1.0);
    }
}

//! Stratified five-state ODE system integrated with fixed-step classical
//! Runge-Kutta.
//!
//! Transition parameters are read as per-year rates. Births enter the
//! susceptible pool of the parent stratum, all-cause mortality applies to
//! the four alive states and the morbid state carries an additional
//! excess-mortality rate. Vaccination acts only through the force of
//! infection.

use crate::error::ModelError;
use crate::model::{
    alive, forces_of_infection, CohortState, HealthState, Intervention, ParameterSet, Stratum, Trajectory,
};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OdeConfig {
    /// Years of follow-up simulated.
    pub horizon: f64,
    /// Fixed RK4 step, in years.
    pub solver_step: f64,
    /// Spacing of recorded snapshots, in years.
    pub report_interval: f64,
}

impl Default for OdeConfig {
    fn default() -> Self {
        OdeConfig { horizon: 100.0, solver_step: 1.0 / 365.0, report_interval: 1.0 }
    }
}

impl OdeConfig {
    pub fn with_horizon(horizon: f64) -> Self {
        OdeConfig { horizon, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let ok = self.solver_step > 0.0
            && self.solver_step <= self.report_interval
            && self.report_interval <= self.horizon
            && self.horizon.is_finite();
        if ok {
            Ok(())
        } else {
            Err(ModelError::InvalidConfig(format!(
                "need 0 < solver_step ({}) <= report_interval ({}) <= horizon ({})",
                self.solver_step, self.report_interval, self.horizon
            )))
        }
    }

    /// RK4 steps per report interval; the step is shrunk slightly if it
    /// does not divide the interval.
    fn steps_per_report(&self) -> usize {
        (self.report_interval / self.solver_step - 1e-9).ceil().max(1.0) as usize
    }

    fn n_reports(&self) -> usize {
        (self.horizon / self.report_interval + 1e-9).floor() as usize
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    pub steps: usize,
    /// Largest step-doubling estimate of the local truncation error, in
    /// persons, sampled on the last step of every report interval.
    pub max_local_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OdeSolution {
    pub trajectory: Trajectory,
    pub diagnostics: SolverDiagnostics,
}

type Counts = [[f64; 5]; 4];

/// Rates of change of every (stratum, state) count.
pub fn derivatives(
    state: &CohortState,
    params: &ParameterSet,
    intervention: Intervention,
) -> Result<Counts, ModelError> {
    let lambda = forces_of_infection(state, params, intervention)?;
    Ok(rhs(&state.counts, &lambda, params))
}

fn rhs(counts: &Counts, lambda: &[f64; 4], p: &ParameterSet) -> Counts {
    let mut d = [[0.0; 5]; 4];
    for st in Stratum::ALL {
        let k = st.index();
        let n = &counts[k];
        let alive_n = alive(n);
        let lam = lambda[k];
        let infections = lam * n[0];
        let progress = p.trans_2_3 * n[1];
        let onset = p.trans_3_4 * n[2];
        let excess = p.trans_4_5 * n[3];
        d[k][0] = p.chi * alive_n - infections - p.trans_1_5 * n[0];
        d[k][1] = infections - progress - p.trans_1_5 * n[1];
        d[k][2] = progress - onset - p.trans_1_5 * n[2];
        d[k][3] = onset - excess - p.trans_1_5 * n[3];
        d[k][4] = p.trans_1_5 * alive_n + excess;
    }
    d
}

fn eval(counts: &Counts, p: &ParameterSet, iv: Intervention) -> Result<Counts, ModelError> {
    let s = CohortState { time: 0.0, counts: *counts };
    derivatives(&s, p, iv)
}

fn axpy(y: &Counts, h: f64, k: &Counts) -> Counts {
    let mut out = *y;
    for (o, d) in out.iter_mut().flatten().zip(k.iter().flatten()) {
        *o += h * d;
    }
    out
}

fn rk4_step(y: &Counts, h: f64, p: &ParameterSet, iv: Intervention) -> Result<Counts, ModelError> {
    let k1 = eval(y, p, iv)?;
    let k2 = eval(&axpy(y, h / 2.0, &k1), p, iv)?;
    let k3 = eval(&axpy(y, h / 2.0, &k2), p, iv)?;
    let k4 = eval(&axpy(y, h, &k3), p, iv)?;
    let mut out = *y;
    for i in 0..4 {
        for j in 0..5 {
            out[i][j] += h / 6.0 * (k1[i][j] + 2.0 * k2[i][j] + 2.0 * k3[i][j] + k4[i][j]);
        }
    }
    Ok(out)
}

fn clamp_checked(y: &mut Counts, time: f64) -> Result<(), ModelError> {
    for st in Stratum::ALL {
        for hs in HealthState::ALL {
            let v = &mut y[st.index()][hs.index()];
            if *v < -1e-9 || v.is_nan() {
                return Err(ModelError::NegativeState { time, stratum: st.to_string(), state: hs.name(), value: *v });
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
    }
    Ok(())
}

/// Integrates from `init` over `cfg.horizon` years, recording a snapshot at
/// time 0 and after every report interval.
pub fn integrate(
    init: &CohortState,
    params: &ParameterSet,
    cfg: &OdeConfig,
    intervention: Intervention,
) -> Result<OdeSolution, ModelError> {
    cfg.validate()?;
    let per_report = cfg.steps_per_report();
    let h = cfg.report_interval / per_report as f64;
    let mut y = init.counts;
    let mut trajectory = Trajectory::new(intervention);
    trajectory.states.push(CohortState { time: init.time, counts: y });
    let mut diag = SolverDiagnostics::default();

    for r in 1..=cfg.n_reports() {
        let t0 = init.time + (r - 1) as f64 * cfg.report_interval;
        for s in 0..per_report {
            let t = t0 + (s + 1) as f64 * h;
            let next = rk4_step(&y, h, params, intervention)?;
            if s + 1 == per_report {
                let half = rk4_step(&y, h / 2.0, params, intervention)?;
                let half = rk4_step(&half, h / 2.0, params, intervention)?;
                let err = next
                    .iter()
                    .flatten()
                    .zip(half.iter().flatten())
                    .map(|(a, b)| (a - b).abs() / 15.0)
                    .fold(0.0, f64::max);
                diag.max_local_error = diag.max_local_error.max(err);
            }
            y = next;
            clamp_checked(&mut y, t)?;
            diag.steps += 1;
        }
        trajectory.states.push(CohortState { time: init.time + r as f64 * cfg.report_interval, counts: y });
    }
    Ok(OdeSolution { trajectory, diagnostics: diag })
}

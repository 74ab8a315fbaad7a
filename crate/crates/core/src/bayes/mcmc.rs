use super::diagnostics::{effective_sample_size, gelman_rubin};
use super::posterior::Posterior;
use super::prior::{Dist, Transform, UpdateRule};
use crate::engine::{Engine, EngineSettings};
use crate::error::{BayesError, ModelError};
use crate::model::{CohortState, HealthState, Intervention, ParamId, ParameterSet, Stratum, Trajectory};
use crate::stats;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// R̂ at or above this value is reported as non-convergence.
pub const RHAT_THRESHOLD: f64 = 1.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McmcConfig {
    pub n_chains: usize,
    /// Sweeps discarded per chain; proposal scales adapt only here.
    pub burn_in: usize,
    /// Sweeps kept per chain, unthinned.
    pub n_keep: usize,
    /// Multiplier on the starting proposal scales, which are derived from
    /// each parameter's effective prior spread.
    pub initial_scale: f64,
    /// Sweeps between proposal-scale adjustments during burn-in.
    pub adapt_window: usize,
    /// Acceptance band the adaptation steers towards.
    pub target_acceptance: [f64; 2],
    pub seed: u64,
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig {
            n_chains: 2,
            burn_in: 2000,
            n_keep: 500,
            initial_scale: 1.0,
            adapt_window: 50,
            target_acceptance: [0.2, 0.4],
            seed: 20_240_601,
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<(), BayesError> {
        let bad = |m: String| Err(BayesError::InvalidConfig(m));
        if self.n_chains == 0 {
            return bad("n_chains must be at least 1".into());
        }
        if self.n_keep == 0 {
            return bad("n_keep must be at least 1".into());
        }
        if self.adapt_window == 0 {
            return bad("adapt_window must be at least 1".into());
        }
        if !(self.initial_scale > 0.0 && self.initial_scale.is_finite()) {
            return bad(format!("initial_scale must be positive, got {}", self.initial_scale));
        }
        let [lo, hi] = self.target_acceptance;
        if !(0.0 < lo && lo < hi && hi < 1.0) {
            return bad(format!("target_acceptance must satisfy 0 < lo < hi < 1, got [{lo}, {hi}]"));
        }
        Ok(())
    }

    pub fn total_draws(&self) -> usize {
        self.n_chains * self.n_keep
    }
}

/// Kept draws from every chain plus diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorDraws {
    pub engine: Engine,
    pub n_chains: usize,
    pub n_keep: usize,
    /// Chain-major: chain `c` occupies `c * n_keep .. (c + 1) * n_keep`.
    pub draws: Vec<ParameterSet>,
    /// Post-burn-in Metropolis acceptance rate per calibrated parameter.
    pub acceptance: BTreeMap<ParamId, f64>,
    /// Split-R̂ per sampled parameter; NaN where undefined.
    pub rhat: BTreeMap<ParamId, f64>,
    pub ess: BTreeMap<ParamId, f64>,
    pub warnings: Vec<String>,
    /// `[status quo, vaccination]` trajectories per draw, once attached.
    pub trajectories: Vec<[Trajectory; 2]>,
}

/// Serializable digest of [`PosteriorDraws`] diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSummary {
    pub engine: Engine,
    pub n_chains: usize,
    pub n_keep: usize,
    pub acceptance: BTreeMap<String, f64>,
    pub rhat: BTreeMap<String, Option<f64>>,
    pub ess: BTreeMap<String, Option<f64>>,
    pub posterior_mean: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

impl PosteriorDraws {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn values(&self, id: ParamId) -> Vec<f64> {
        self.draws.iter().map(|d| d.get(id)).collect()
    }

    pub fn chains(&self, id: ParamId) -> Vec<Vec<f64>> {
        self.draws.chunks(self.n_keep).map(|c| c.iter().map(|d| d.get(id)).collect()).collect()
    }

    pub fn mean(&self, id: ParamId) -> f64 {
        stats::mean(&self.values(id))
    }

    pub fn quantile(&self, id: ParamId, p: f64) -> f64 {
        stats::quantile(&self.values(id), p)
    }

    pub fn interval95(&self, id: ParamId) -> (f64, f64) {
        let mut v = self.values(id);
        v.sort_by(f64::total_cmp);
        (stats::quantile_sorted(&v, 0.025), stats::quantile_sorted(&v, 0.975))
    }

    /// Posterior-mean parameter set.
    pub fn mean_parameters(&self) -> ParameterSet {
        let mut p = ParameterSet::reference();
        for id in ParamId::ALL {
            p.set(id, self.mean(id));
        }
        p
    }

    pub fn converged(&self) -> bool {
        self.rhat.values().all(|r| *r < RHAT_THRESHOLD)
    }

    /// Runs both interventions for every draw over `years` years.
    pub fn attach_trajectories(
        &mut self,
        settings: &EngineSettings,
        init: &CohortState,
        years: usize,
    ) -> Result<(), ModelError> {
        let engine = self.engine;
        self.trajectories = self
            .draws
            .par_iter()
            .map(|p| {
                Ok([
                    settings.simulate(engine, init, p, years, Intervention::StatusQuo)?,
                    settings.simulate(engine, init, p, years, Intervention::Vaccination)?,
                ])
            })
            .collect::<Result<Vec<_>, ModelError>>()?;
        Ok(())
    }

    /// Year-wise posterior mean of one compartment over the attached
    /// trajectories.
    pub fn mean_series(&self, intervention: Intervention, stratum: Stratum, state: HealthState) -> Vec<f64> {
        let idx = match intervention {
            Intervention::StatusQuo => 0,
            Intervention::Vaccination => 1,
        };
        let Some(first) = self.trajectories.first() else { return Vec::new() };
        let len = first[idx].len();
        let mut acc = vec![0.0; len];
        for t in &self.trajectories {
            for (a, s) in acc.iter_mut().zip(&t[idx].states) {
                *a += s.get(stratum, state);
            }
        }
        acc.iter().map(|a| a / self.trajectories.len() as f64).collect()
    }

    /// Year-wise posterior quantile of one compartment.
    pub fn quantile_series(
        &self,
        intervention: Intervention,
        stratum: Stratum,
        state: HealthState,
        p: f64,
    ) -> Vec<f64> {
        let idx = usize::from(intervention == Intervention::Vaccination);
        let Some(first) = self.trajectories.first() else { return Vec::new() };
        (0..first[idx].len())
            .map(|y| {
                let v: Vec<f64> = self.trajectories.iter().map(|t| t[idx].states[y].get(stratum, state)).collect();
                stats::quantile(&v, p)
            })
            .collect()
    }

    pub fn summary(&self) -> DiagnosticsSummary {
        let finite = |v: f64| v.is_finite().then_some(v);
        DiagnosticsSummary {
            engine: self.engine,
            n_chains: self.n_chains,
            n_keep: self.n_keep,
            acceptance: self.acceptance.iter().map(|(k, v)| (k.name().to_string(), *v)).collect(),
            rhat: self.rhat.iter().map(|(k, v)| (k.name().to_string(), finite(*v))).collect(),
            ess: self.ess.iter().map(|(k, v)| (k.name().to_string(), finite(*v))).collect(),
            posterior_mean: ParamId::ALL.iter().map(|k| (k.name().to_string(), self.mean(*k))).collect(),
            warnings: self.warnings.clone(),
        }
    }
}

struct ChainOutput {
    kept: Vec<ParameterSet>,
    accepted: Vec<usize>,
}

struct Updater {
    id: ParamId,
    transform: Transform,
    scale: f64,
}

/// Metropolis-within-Gibbs. Each sweep draws fixed-prior parameters from
/// their priors and conjugate parameters from their closed-form posteriors,
/// then updates every calibrated parameter in turn with a Gaussian random
/// walk on its log or logit scale.
pub fn sample(cfg: &McmcConfig, posterior: &Posterior) -> Result<PosteriorDraws, BayesError> {
    cfg.validate()?;
    let outputs =
        (0..cfg.n_chains).into_par_iter().map(|c| run_chain(cfg, posterior, c)).collect::<Result<Vec<_>, _>>()?;

    let calibrated: Vec<ParamId> = posterior.priors.with_rule(UpdateRule::Calibrated).map(|s| s.param).collect();
    let mut acceptance = BTreeMap::new();
    for (k, id) in calibrated.iter().enumerate() {
        let acc: usize = outputs.iter().map(|o| o.accepted[k]).sum();
        acceptance.insert(*id, acc as f64 / (cfg.n_keep * cfg.n_chains) as f64);
    }
    let mut draws = PosteriorDraws {
        engine: posterior.engine,
        n_chains: cfg.n_chains,
        n_keep: cfg.n_keep,
        draws: outputs.into_iter().flat_map(|o| o.kept).collect(),
        acceptance,
        rhat: BTreeMap::new(),
        ess: BTreeMap::new(),
        warnings: Vec::new(),
        trajectories: Vec::new(),
    };
    for spec in posterior.priors.iter().filter(|s| !matches!(s.dist, Dist::Fixed { .. })) {
        let chains = draws.chains(spec.param);
        let (rhat, ess) = match (gelman_rubin(&chains), effective_sample_size(&chains)) {
            (Ok(r), Ok(e)) => (r, e),
            (Err(e), _) | (_, Err(e)) => {
                draws.warnings.push(format!("R-hat undefined for {}: {e}", spec.param));
                (f64::NAN, f64::NAN)
            }
        };
        if rhat >= RHAT_THRESHOLD {
            draws.warnings.push(format!("non-convergence: R-hat for {} is {rhat:.3}", spec.param));
        }
        draws.rhat.insert(spec.param, rhat);
        draws.ess.insert(spec.param, ess);
    }
    Ok(draws)
}

fn chain_rng(seed: u64, chain: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain as u64 + 1);
    rng
}

fn run_chain(cfg: &McmcConfig, post: &Posterior, chain: usize) -> Result<ChainOutput, BayesError> {
    let mut rng = chain_rng(cfg.seed, chain);
    let mut updaters: Vec<Updater> = post
        .priors
        .with_rule(UpdateRule::Calibrated)
        .map(|s| {
            let eff = post.effective_prior(s.param);
            Updater { id: s.param, transform: s.dist.transform(), scale: cfg.initial_scale * eff.transformed_sd() }
        })
        .collect();
    let direct: Vec<(ParamId, Dist)> = post
        .priors
        .iter()
        .filter(|s| s.rule != UpdateRule::Calibrated)
        .map(|s| (s.param, if s.rule == UpdateRule::Conjugate { post.effective_prior(s.param) } else { s.dist }))
        .collect();
    let direct_moves_likelihood = direct.iter().any(|(id, _)| ParamId::NATURAL_HISTORY.contains(id));

    // Overdispersed start: a draw from the effective priors.
    let mut theta = ParameterSet::reference();
    let mut lp = f64::NEG_INFINITY;
    for _ in 0..1000 {
        for s in post.priors.iter() {
            let d = if s.rule == UpdateRule::Calibrated { post.effective_prior(s.param) } else { s.dist };
            theta.set(s.param, d.sample(&mut rng));
        }
        lp = post.ln_conditional(&theta);
        if lp.is_finite() {
            break;
        }
    }
    if !lp.is_finite() {
        return Err(BayesError::InvalidConfig(format!("chain {chain}: no starting point with finite density")));
    }

    let [lo, hi] = cfg.target_acceptance;
    let mut window_acc = vec![0usize; updaters.len()];
    let mut accepted = vec![0usize; updaters.len()];
    let mut kept = Vec::with_capacity(cfg.n_keep);

    for sweep in 0..cfg.burn_in + cfg.n_keep {
        let burning = sweep < cfg.burn_in;
        for (id, d) in &direct {
            theta.set(*id, d.sample(&mut rng));
        }
        if direct_moves_likelihood {
            lp = post.ln_conditional(&theta);
        }
        for (k, u) in updaters.iter().enumerate() {
            let x = theta.get(u.id);
            let z: f64 = u.transform.forward(x) + u.scale * rng.sample::<f64, _>(StandardNormal);
            let x_new = u.transform.inverse(z);
            let mut proposal = theta;
            proposal.set(u.id, x_new);
            let lp_new = post.ln_conditional(&proposal);
            let log_ratio = lp_new - lp + u.transform.ln_jacobian(x_new) - u.transform.ln_jacobian(x);
            let u01: f64 = rng.random();
            if lp_new.is_finite() && u01.ln() < log_ratio {
                theta = proposal;
                lp = lp_new;
                if burning {
                    window_acc[k] += 1;
                } else {
                    accepted[k] += 1;
                }
            }
        }
        if burning && (sweep + 1) % cfg.adapt_window == 0 {
            for (u, acc) in updaters.iter_mut().zip(window_acc.iter_mut()) {
                let rate = *acc as f64 / cfg.adapt_window as f64;
                if rate < lo {
                    u.scale *= if rate < lo / 2.0 { 0.5 } else { 0.8 };
                } else if rate > hi {
                    u.scale *= if rate > (1.0 + hi) / 2.0 { 2.0 } else { 1.25 };
                }
                *acc = 0;
            }
        }
        if !burning {
            kept.push(theta);
        }
    }
    Ok(ChainOutput { kept, accepted })
}

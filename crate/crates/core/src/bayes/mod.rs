//! Priors, conjugate updates, the calibration posterior, an adaptive
//! Metropolis-within-Gibbs sampler and convergence diagnostics.

mod diagnostics;
mod evidence;
mod mcmc;
mod posterior;
mod prior;

pub use diagnostics::{effective_sample_size, gelman_rubin, mcse_mean, potential_scale_reduction};
pub use evidence::{CalibrationSeries, EvidenceData, CALIBRATION_YEARS};
pub use mcmc::{sample, DiagnosticsSummary, McmcConfig, PosteriorDraws, RHAT_THRESHOLD};
pub use posterior::{calibration_log_likelihood, ln_poisson, log_posterior, Posterior, POISSON_FLOOR};
pub use prior::{
    conjugate_posterior_beta, conjugate_posterior_gamma, Dist, PriorSet, PriorSpec, Transform, UpdateRule,
};

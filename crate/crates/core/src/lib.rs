//! Dynamic transmission models of a chronic sexually transmitted infection
//! in a heterosexual population stratified by sex and sexual activity,
//! with Bayesian and frequentist calibration and probabilistic
//! cost-effectiveness analysis of a vaccination programme.
//!
//! The same state layout and parameter set feed two engines: a continuous
//! ODE system ([`ode`]) and a discrete-time Markov cohort ([`markov`]).

pub mod bayes;
pub mod calibrate;
pub mod datasim;
pub mod econ;
pub mod engine;
pub mod error;
pub mod io;
pub mod markov;
pub mod model;
pub mod ode;
pub mod pipeline;
pub mod stats;
pub mod svg;

use thiserror::Error;

/// Failures of the shared model and both simulation engines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("degenerate population: no alive persons weighted by partner acquisition for {sex} partners")]
    DegeneratePopulation { sex: &'static str },

    #[error("parameter {name} = {value} is outside its support")]
    InvalidParameter { name: &'static str, value: f64 },

    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),

    #[error("negative state at t = {time}: {stratum} {state} = {value} (solver step too large?)")]
    NegativeState { time: f64, stratum: String, state: &'static str, value: f64 },

    #[error("transition probabilities out of row {state} sum to {sum} > 1 for {stratum} at cycle {cycle}")]
    ProbabilityOverflow { cycle: usize, stratum: String, state: &'static str, sum: f64 },

    #[error("invalid engine configuration: {0}")]
    InvalidConfig(String),
}

/// Failures in the inference layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum BayesError {
    #[error("invalid hyperparameters for {family}: {detail}")]
    InvalidHyperparameter { family: &'static str, detail: String },

    #[error("invalid binomial evidence: r = {r}, n = {n}")]
    InvalidBinomial { r: u64, n: u64 },

    #[error("diagnostic undefined: {0}")]
    UndefinedDiagnostic(String),

    #[error("invalid MCMC configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid evidence: {0}")]
    InvalidEvidence(String),

    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Failures in the cost-effectiveness layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum EconError {
    #[error("ICER undefined: mean incremental effect is zero")]
    UndefinedIcer,

    #[error("need at least {needed} draws, got {got}")]
    TooFewDraws { needed: usize, got: usize },

    #[error("invalid economic configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Malformed or unreadable input tables.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },

    #[error("{path}, line {line}: {detail}")]
    Schema { path: String, line: u64, detail: String },
}

/// Pipeline failures, grouped by the exit code they map to.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(#[from] DataError),

    #[error("numeric failure in {stage}: {message}")]
    Numeric { stage: &'static str, message: String },

    #[error("cannot write {path}: {source}")]
    Output { path: String, source: std::io::Error },
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Data(_) => 3,
            PipelineError::Numeric { .. } => 4,
            PipelineError::Output { .. } => 1,
        }
    }
}

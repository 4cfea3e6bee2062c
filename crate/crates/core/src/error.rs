use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite state at step {step}: {detail}")]
    NonFiniteState { step: usize, detail: String },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("no proper policy exists: state {0} cannot reach a terminal state")]
    NonEpisodic(usize),

    #[error("policy evaluation did not converge after {0} sweeps")]
    EvaluationDiverged(usize),

    #[error("policy iteration exceeded {0} improvement steps")]
    TooManyImprovements(usize),

    #[error("every candidate evaluation failed in generation {0}")]
    AllCandidatesFailed(usize),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("no data: {0}")]
    NoData(String),

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("config parse error: {0}")]
    Parse(String),

    #[error("missing config key `{0}`")]
    MissingKey(&'static str),

    #[error("invalid `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: String },

    #[error("reception space holds no molecule: (Re³ - Rr³)/Ra³ = {ratio} < 1")]
    Capacity { ratio: f64 },

    #[error("{op}: {reason}")]
    Domain { op: &'static str, reason: String },

    #[error("absorbing chain: state {state} has no death events (mu = gamma = 0)")]
    AbsorbingChain { state: usize },

    #[error("chain with {states} states exceeds the limit of {limit}")]
    ChainTooLarge { states: u64, limit: u64 },

    #[error("state index {index} outside 1..={max}")]
    StateOutOfRange { index: u64, max: u64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("occupancy factor f = {f} is infeasible: the lower bound requires f < f* = K+/(1+K+) = {f_star}")]
    Infeasible { f: f64, f_star: f64 },

    #[error("empty dosage interval: Q_min = {q_min} exceeds Q_max = {q_max}")]
    EmptyInterval { q_min: f64, q_max: f64 },

    #[error("simulation deadlock: state {state} has zero total rate")]
    Deadlock { state: usize },

    #[error("invalid simulation config: {0}")]
    SimConfig(String),
}

impl Error {
    pub(crate) fn domain(op: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            op,
            reason: reason.into(),
        }
    }

    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            field,
            reason: reason.into(),
        }
    }
}

use std::path::PathBuf;

/// Errors raised by chain construction, statistics, bounds and verification.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("row {row} is not stochastic (sum = {sum})")]
    NonStochasticRow { row: usize, sum: f64 },

    #[error(
        "chain is not reversible: |mu_s P_st - mu_t P_ts| = {violation:e} at (s, t) = ({s}, {t})"
    )]
    NotReversible { s: usize, t: usize, violation: f64 },

    #[error("chain is reducible: invariant weight of state {state} is {weight:e}")]
    Reducible { state: usize, weight: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid spectral gap {0}; expected 0 < g <= 2")]
    InvalidGap(f64),

    #[error("method {method} {reason}")]
    WrongMethod {
        method: &'static str,
        reason: String,
    },

    #[error("missing parameter: {0}")]
    MissingParameter(&'static str),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("target probability unattainable: bound rate is zero")]
    Unattainable,

    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Short machine-parsable code used as the CLI diagnostic prefix.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "E_INVALID_PARAMETER",
            Error::Capacity(_) => "E_CAPACITY",
            Error::Parse { .. } => "E_PARSE",
            Error::NonStochasticRow { .. } => "E_NON_STOCHASTIC",
            Error::NotReversible { .. } => "E_NOT_REVERSIBLE",
            Error::Reducible { .. } => "E_REDUCIBLE",
            Error::Numerical(_) => "E_NUMERICAL",
            Error::DimensionMismatch { .. } => "E_DIMENSION",
            Error::InvalidGap(_) => "E_INVALID_GAP",
            Error::WrongMethod { .. } => "E_WRONG_METHOD",
            Error::MissingParameter(_) => "E_MISSING_PARAMETER",
            Error::Precondition(_) => "E_PRECONDITION",
            Error::Unattainable => "E_UNATTAINABLE",
            Error::Io { .. } => "E_IO",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors produced by the library. The CLI maps these onto exit codes.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("distributions are over different outcome sets ({0})")]
    MismatchedOutcomes(String),
    #[error("distribution family is empty")]
    EmptyFamily,
    #[error("value {0} is not a probability")]
    NotAProbability(String),
    #[error("weights sum to {0}, expected exactly 1")]
    NotNormalized(String),
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("invalid query tuple: {0}")]
    InvalidQuery(String),
    #[error("q = {q} exceeds n = {n}")]
    TooManyQueries { q: usize, n: usize },
    #[error("{what} = {value} exceeds the cap of {cap}")]
    CapExceeded {
        what: &'static str,
        value: u64,
        cap: u64,
    },
    #[error(
        "exact DP needs {states} joint states, over the budget of {budget}; \
         use Monte Carlo estimation (or raise --budget)"
    )]
    BudgetExceeded { states: u64, budget: u64 },
    #[error("exact dyadic mode needs denominator 2^{bits}, over 2^127; use float64 mode")]
    DyadicOverflow { bits: u64 },
    #[error("distribution is not stationary for the chain")]
    NotStationary,
    #[error("stationary distribution has zero mass on state {0}")]
    ZeroStationaryMass(usize),
    #[error("matrix is not row-stochastic: {0}")]
    NotStochastic(String),
    #[error("transcript forces inconsistent values: {0}")]
    InconsistentTranscript(String),
    #[error("transcript repeats or reverses an earlier query at position {0}")]
    EquivalentQueries(usize),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("no accepted samples after {0} trials; increase the trial count")]
    NoAcceptedSamples(u64),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for errors caused by size limits rather than bad input.
    pub fn is_resource(&self) -> bool {
        matches!(
            self,
            Error::CapExceeded { .. } | Error::BudgetExceeded { .. } | Error::DyadicOverflow { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

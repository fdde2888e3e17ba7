//! Crate-wide error type and exit-code classification.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid register: {0}")]
    InvalidRegister(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid observable: {0}")]
    InvalidObservable(String),
    #[error("register mismatch: {0}")]
    RegisterMismatch(String),
    #[error("party index {party} out of range for {n} parties")]
    PartyOutOfRange { party: usize, n: usize },
    #[error("total dimension {dim} exceeds the cap {cap} for {kind} states")]
    DimensionCap { dim: usize, cap: usize, kind: &'static str },
    #[error("measurement basis is not orthonormal (max deviation {deviation:.3e})")]
    NonOrthonormalBasis { deviation: f64 },
    #[error("covering is invalid: {0}")]
    InvalidCovering(String),
    #[error("bell inequality is invalid: {0}")]
    InvalidInequality(String),
    #[error("strategy is invalid for this run: {0}")]
    InvalidStrategy(String),
    #[error("no saturating biseparable model is implemented for this covering: {0}")]
    InfeasibleAdversary(String),
    #[error("biseparable bound {bound} is not below the quantum bound {quantum}")]
    BoundNotBelowQuantum { bound: f64, quantum: f64 },
    #[error("state does not violate the bound at full visibility (beta_bar {beta_bar} <= {bound})")]
    NoViolation { beta_bar: f64, bound: f64 },
    #[error("score is not monotone in visibility near v={v}")]
    NonMonotoneVisibility { v: f64 },
    #[error("fair-sampling assumption violated: no-click element varies across settings by {deviation:.3e}")]
    FairSamplingViolated { deviation: f64 },
    #[error("filter success probability {p:.3e} is below the floor")]
    FilterSuccessTooSmall { p: f64 },
    #[error("count table is malformed: {0}")]
    MalformedCounts(String),
    #[error("numerical check failed: {0}")]
    Numerical(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// CLI exit code: 1 for validation errors, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical(_)
            | Error::NonMonotoneVisibility { .. }
            | Error::FilterSuccessTooSmall { .. }
            | Error::NoViolation { .. } => 2,
            _ => 1,
        }
    }
}

//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("exponent out of range: {0}")]
    ExponentOutOfRange(String),
    #[error("weight is negative: {0}")]
    NegativeWeight(String),
    #[error("point outside the weight support: {0}")]
    BadSupportPoint(String),
    #[error("evaluation point outside the open support: {0}")]
    OutOfSupport(String),
    #[error("singular point of the weight or its potential: {0}")]
    SingularPoint(String),
    #[error("z lies on the closed support: {0}")]
    ZOnSupport(String),
    #[error("bad quadrature node count: {0}")]
    BadNodeCount(String),
    #[error("evaluation failure (non-finite value): {0}")]
    EvaluationFailure(String),
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("degree out of range: {0}")]
    DegreeOutOfRange(String),
    #[error("family mismatch: {0}")]
    FamilyMismatch(String),
    #[error("difference step too large: {0}")]
    StepTooLarge(String),
    #[error("unsupported combination: {0}")]
    Unsupported(String),
    #[error("inadmissible weight: {0}")]
    InadmissibleWeight(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// CLI exit code classification: 2 usage/config, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::PrecisionExhausted(_) | Error::EvaluationFailure(_) => 3,
            _ => 2,
        }
    }
}

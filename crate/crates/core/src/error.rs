use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid volatility profile: {0}")]
    InvalidProfile(String),

    #[error("invalid drift parameters: {0}")]
    InvalidDrift(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("time {t} outside the valid range [0, {horizon})")]
    TimeOutOfRange { t: f64, horizon: f64 },

    #[error("degenerate transform: nonpositive radicand {radicand} at t = {t}")]
    DegenerateTransform { t: f64, radicand: f64 },

    #[error("degenerate path: quadratic functional is {q}, estimator undefined")]
    DegeneratePath { q: f64 },

    #[error("mismatched models: {0}")]
    ModelMismatch(String),

    #[error("model is not in terminal form (K != 0 and C = -K S(T) required)")]
    NotTerminalForm,

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("transition variance inconsistency at step {step}: {variance}")]
    NegativeTransitionVariance { step: usize, variance: f64 },

    #[error("riccati solver exceeded {max_steps} steps (stiffness guard)")]
    RiccatiStiff { max_steps: usize },

    #[error("riccati solution diverged at s = {s}")]
    RiccatiDiverged { s: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("empty sample")]
    EmptySample,
}

pub type Result<T> = std::result::Result<T, Error>;

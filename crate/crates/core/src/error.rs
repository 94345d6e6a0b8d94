use thiserror::Error;

/// Errors raised by validation and by the estimators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("length mismatch: {left} draws but {right} variances")]
    LengthMismatch { left: usize, right: usize },

    #[error("noise variance at index {index} is not strictly positive ({value})")]
    NonPositiveVariance { index: usize, value: f64 },

    #[error("non-finite {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("need at least 2 units, got {0}")]
    TooFewUnits(usize),

    #[error("effective sample size m must be >= 1, got {0}")]
    BadM(f64),

    #[error("panel needs at least 2 periods, got {0}")]
    TooFewPeriods(usize),

    #[error("unit {unit} has zero within-unit variance")]
    ZeroVariance { unit: usize },

    #[error("quantile level must lie in (0, 1), got {0}")]
    BadTau(f64),

    #[error("bandwidth must be positive and finite, got {0}")]
    BadBandwidth(f64),

    #[error("confidence level must lie in (0, 1), got {0}")]
    BadLevel(f64),

    #[error("lambda must be positive and finite, got {0}")]
    BadLambda(f64),

    #[error("invalid split m1={m1}, m2={m2} for a panel with m={m}")]
    BadSplit { m1: usize, m2: usize, m: usize },

    #[error("could not bracket the {tau}-quantile of the smoothed distribution")]
    BracketFailure { tau: f64 },

    #[error("cross-validation minimum sits on the {} edge of the search window (h={h})", if *.at_lower { "lower" } else { "upper" })]
    NoInteriorMinimum { h: f64, at_lower: bool },

    #[error("invalid bandwidth search window: {0}")]
    BadSearch(String),

    #[error("transform returned a non-finite value at draw {index}")]
    NonFiniteTransform { index: usize },

    #[error("invalid parameters: {0}")]
    BadParams(String),

    #[error("invalid design: {0}")]
    BadSpec(String),

    #[error("invalid grid: {0}")]
    BadGrid(String),

    #[error("need at least {min} replications, got {got}")]
    TooFewReplications { min: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Probability masses cannot be scaled to sum to one.
    #[error("law is not normalizable: {0}")]
    NonNormalizable(String),

    /// A law or operation parameter is outside its valid range.
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// The offspring mean does not exceed one.
    #[error("offspring law is not supercritical (mean {mean})")]
    NotSupercritical { mean: f64 },

    /// An operation needs a constant (deterministic) offspring law.
    #[error("offspring law is not constant")]
    NotDeterministic,

    /// An exact enumeration would exceed the configured support limit.
    #[error("state space too large: {0}")]
    StateSpaceTooLarge(String),

    /// A dynamic-programming truncation could not certify the requested tolerance.
    #[error("truncation too tight: error bound {error_bound} exceeds tolerance {tolerance}")]
    TruncationTooTight { error_bound: f64, tolerance: f64 },

    /// A perpetuity bracket is wider than the requested tolerance.
    #[error("depth too shallow: bracket width {width} exceeds tolerance {tolerance}")]
    DepthTooShallow { width: f64, tolerance: f64 },

    /// Every term of a factor series vanishes, so the series is identically zero.
    #[error("zero factor: P[Y <= g(1)] = 0, the series is identically zero")]
    ZeroFactor,

    /// A scalar argument lies outside the admissible interval.
    #[error("out of range: {0}")]
    OutOfRange(String),

    /// A certificate search ran out of candidates.
    #[error("search exhausted: {0}")]
    SearchExhausted(String),

    /// The model violates a structural precondition of the requested experiment.
    #[error("out of scope: {0}")]
    OutOfScope(String),
}

pub type Result<T> = std::result::Result<T, Error>;

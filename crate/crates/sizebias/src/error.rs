use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A coordinate has zero mean or zero variance, so the tail-bound
    /// hypotheses fail and size biasing in that direction is undefined.
    #[error("coordinate {direction} is degenerate (zero mean or zero variance)")]
    DegenerateCoordinate { direction: usize },

    /// A quantity that must be strictly positive is not.
    #[error("input `{field}` must be strictly positive")]
    NonPositiveInput { field: &'static str },

    /// A tail threshold vector has a negative component.
    #[error("tail threshold t must be component-wise nonnegative")]
    NegativeT,

    /// Pattern dimensions outside the supported range (3 <= m <= 12, n >= m).
    #[error("invalid pattern dimensions n={n}, m={m} (need n >= m and 3 <= m <= 12)")]
    InvalidPatternDims { n: usize, m: usize },

    /// A local-dependence neighborhood's product space exceeds the
    /// enumeration cap; tilting it exactly is not possible.
    #[error("neighborhood product space has {size} atoms, exceeding the cap of {cap}")]
    NeighborhoodTooLarge { size: u128, cap: u128 },

    /// An exhaustive enumeration would visit more outcomes than the cap.
    #[error("state space has {size} outcomes, exceeding the enumeration cap of {cap}")]
    StateSpaceTooLarge { size: u128, cap: u128 },

    /// A direction index outside 1..=k.
    #[error("direction {direction} out of range 1..={k}")]
    DirectionOutOfRange { direction: usize, k: usize },

    /// Vector argument with the wrong number of coordinates.
    #[error("dimension mismatch: expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A probability mass function violating its invariants.
    #[error("invalid pmf: {reason}")]
    InvalidPmf { reason: String },

    /// A model file or model structure violating its invariants.
    #[error("invalid model: {reason}")]
    InvalidModel { reason: String },

    /// Malformed rational literal.
    #[error("cannot parse `{text}` as a rational (expected `num` or `num/den`)")]
    ParseRational { text: String },
}

pub(crate) fn invalid_pmf(reason: impl Into<String>) -> Error {
    Error::InvalidPmf {
        reason: reason.into(),
    }
}

pub(crate) fn invalid_model(reason: impl Into<String>) -> Error {
    Error::InvalidModel {
        reason: reason.into(),
    }
}

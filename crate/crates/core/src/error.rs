use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("chart point {0:?} lies outside the parameter domain")]
    OutOfDomain(Vec<f64>),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("integrand is not finite at chart point {0:?}")]
    NonFinite(Vec<f64>),
    #[error("block {0} is unbounded and has no truncation")]
    TruncationMissing(usize),
    #[error("frequency {0:?} does not lie in the regular set")]
    NotRegular(Vec<f64>),
    #[error("region is not contained in the regular set")]
    NotRegularRegion,
    #[error("group {0} has no closed-form orbit atlas")]
    NoAtlas(String),
    #[error("probe grid is empty")]
    EmptyProbeGrid,
    #[error("quotient measure of the region is infinite: no admissible vector exists")]
    NotStronglySquareIntegrable,
    #[error("modular function at h0 is {0}: the powers of h0 contain no contraction")]
    BadContraction(f64),
    #[error("group is unimodular; the tiling construction needs a non-unimodular group")]
    Unimodular,
    #[error("group is not unimodular")]
    NotUnimodular,
    #[error("profile cannot be evaluated: {0}")]
    ProfileUnevaluable(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("profile is not admissible: {0}")]
    NotAdmissibleInput(String),
    #[error("invalid expression: {0}")]
    Expression(String),
    #[error("invalid chart: {0}")]
    InvalidChart(String),
    #[error("invalid region: {0}")]
    InvalidRegion(String),
}

pub type Result<T> = core::result::Result<T, Error>;

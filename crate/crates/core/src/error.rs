use thiserror::Error;

/// Errors raised by model construction, linear algebra and the inference
/// routines. Certificate failures inside a protocol run are *not* errors;
/// they are reported as refusals in the diagnostic report.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("probability P[{i}][{j}] = {value} lies outside [0, 1]")]
    OutOfRangeProbability { i: usize, j: usize, value: f64 },

    #[error("membership row {row} is not one-hot")]
    MalformedMembership { row: usize },

    #[error("two-block spectrum requires an even node count, got {0}")]
    OddN(usize),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("target dimension k = {k} outside 1..={max}")]
    KOutOfRange { k: usize, max: usize },

    #[error("shape mismatch: expected {expected}, got {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("level alpha = {0} is not in (0, 1)")]
    BadLevel(f64),

    #[error("gap {0} is not positive")]
    NonpositiveGap(f64),

    #[error("no gap certificate: {0}")]
    NoGapCertificate(String),

    #[error("centers {0} and {1} coincide")]
    DuplicateCenters(usize, usize),

    #[error("exact permutation search supports at most 8 labels, got {0}")]
    TooManyLabelsForExact(usize),

    #[error("margin {0} is not positive")]
    NonpositiveMargin(f64),

    #[error("matrix outside the functional's domain: {rho} against limit {limit}")]
    OutsideDomain { rho: f64, limit: f64 },

    #[error("top eigenvalue is not simple (observed gap {0:e})")]
    DegenerateTopEigenvalue(f64),

    #[error("group {0} is empty")]
    EmptyGroup(u8),

    #[error("parity tolerance {epsilon} is below the transfer slack r/tau = {slack}")]
    InsufficientTolerance { epsilon: f64, slack: f64 },

    #[error("unsupported model spec: {0}")]
    UnsupportedSpec(String),

    #[error("no tie at the selection threshold")]
    NoTiePresent,

    #[error("instance too small: {0}")]
    TooSmall(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn shape(expected: impl ToString, found: impl ToString) -> Self {
        Error::ShapeMismatch { expected: expected.to_string(), found: found.to_string() }
    }

    /// Whether the error stems from bad input (CLI exit code 1) rather than a
    /// numerical breakdown (exit code 2).
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Numerical(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

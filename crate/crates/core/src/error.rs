use thiserror::Error;

/// Coarse classification used to map failures onto process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Malformed or inconsistent input.
    Argument,
    /// An algorithm failed to converge or hit a numerical pathology.
    Numeric,
    /// Input is well-formed but violates a physical constraint.
    Constraint,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("spin must be a positive multiple of 1/2 (got 2S = {0})")]
    InvalidSpin(i64),
    #[error("spin value {0:?} is not a positive integer or half-integer")]
    SpinParse(String),
    #[error("symmetry order N = {n} exceeds 2S = {two_s}")]
    SymmetryTooHigh { n: u32, two_s: u32 },
    #[error("symmetry order must be at least 2 (got {0})")]
    SymmetryTooLow(u32),
    #[error("hard-axis condition violated: {0}")]
    HardAxisViolated(String),
    #[error("anisotropy ratio lambda must be positive (got {0})")]
    NegativeCoupling(f64),
    #[error("field h must be non-negative (got {0})")]
    NegativeField(f64),
    #[error("magnetic quantum number out of range: {0}")]
    OutOfRange(String),
    #[error("eigensolver did not converge within {0} iterations")]
    ConvergenceFailure(usize),
    #[error("minimization failed: {0}")]
    MinimizationFailure(String),
    #[error("effective mass is singular at phi = {0}")]
    MassSingularity(f64),
    #[error("barrier vanished: {0}")]
    BarrierVanished(String),
    #[error("V_N(0) is not the minimum of the period (minimum found at phi = {0})")]
    MinimumShifted(f64),
    #[error("level index {0} outside -N/2 < k <= N/2")]
    IndexOutOfRange(i64),
    #[error("operation requires symmetry order {expected} (got {got})")]
    WrongSymmetry { expected: u32, got: u32 },
    #[error("prefactor fit is ill-conditioned: {0}")]
    FitIllConditioned(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            InvalidSpin(_) | SpinParse(_) | SymmetryTooLow(_) | OutOfRange(_)
            | IndexOutOfRange(_) | WrongSymmetry { .. } | InvalidArgument(_) | Parse(_) => {
                ErrorClass::Argument
            }
            SymmetryTooHigh { .. } | HardAxisViolated(_) | NegativeCoupling(_)
            | NegativeField(_) | MassSingularity(_) | BarrierVanished(_) | MinimumShifted(_) => {
                ErrorClass::Constraint
            }
            ConvergenceFailure(_) | MinimizationFailure(_) | FitIllConditioned(_) | Io(_) => {
                ErrorClass::Numeric
            }
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use alloc::boxed::Box;
use alloc::string::String;
use core::fmt;

/// Errors raised by the regression toolkit.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A length or dimension did not match what the operation requires.
    DimensionMismatch {
        /// What was being checked.
        what: &'static str,
        /// Required size.
        expected: usize,
        /// Size actually supplied.
        found: usize,
    },
    /// `m` or `k` is zero, or `k` does not divide `m`.
    InvalidShape {
        /// Matrix order.
        m: usize,
        /// Block size.
        k: usize,
    },
    /// A block was not exactly symmetric.
    NotSymmetric {
        /// Block index.
        block: usize,
        /// Row inside the block.
        row: usize,
        /// Column inside the block.
        col: usize,
    },
    /// NaN or infinity where a finite value is required.
    NonFinite(&'static str),
    /// A similarity matrix was not orthogonal or not block-structured.
    NotOrthogonal {
        /// Largest entry of `OᵀO - I`, or of the off-structure part.
        deviation: f64,
    },
    /// The Jacobi eigensolver did not converge on a block.
    EigenNotConverged {
        /// Block index.
        block: usize,
    },
    /// The eigengap needs at least two eigenvalues (m ≥ 2).
    UndefinedEigengap,
    /// A configuration value is out of range.
    InvalidConfig(&'static str),
    /// An operation needs at least one sample.
    EmptyDataset,
    /// A covariate row has zero norm and cannot be mapped onto the sphere.
    ZeroDirection {
        /// Row index.
        index: usize,
    },
    /// A train/test split would leave one side empty.
    DegenerateSplit {
        /// Sample count.
        n: usize,
        /// Requested test fraction.
        test_fraction: f64,
    },
    /// A degrees-of-freedom level is not a triangular number.
    InvalidDofLevel(usize),
    /// A model or transform tag was not recognised.
    UnknownTag(String),
    /// Error attached to a specific sample.
    Sample {
        /// Sample index.
        index: usize,
        /// Underlying failure.
        source: Box<Error>,
    },
    /// The least-squares update produced non-finite parameters.
    Diverged,
    /// Every restart of a fit failed.
    AllRestartsFailed {
        /// Number of restarts attempted.
        restarts: usize,
    },
    /// Every hold-out candidate failed.
    NoSurvivingCandidate,
}

/// Result alias used across the crate.
pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    /// True for failures of the numerical routines rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::EigenNotConverged { .. }
            | Error::AllRestartsFailed { .. }
            | Error::Diverged
            | Error::NoSurvivingCandidate => true,
            Error::Sample { source, .. } => source.is_numerical(),
            _ => false,
        }
    }

    pub(crate) fn at_sample(self, index: usize) -> Error {
        Error::Sample {
            index,
            source: Box::new(self),
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch {
                what,
                expected,
                found,
            } => write!(f, "{what}: expected {expected}, found {found}"),
            Error::InvalidShape { m, k } => {
                write!(f, "invalid shape m={m}, k={k}: need m, k > 0 and k dividing m")
            }
            Error::NotSymmetric { block, row, col } => {
                write!(f, "block {block} is not symmetric at ({row}, {col})")
            }
            Error::NonFinite(what) => write!(f, "non-finite value in {what}"),
            Error::NotOrthogonal { deviation } => {
                write!(f, "matrix is not a block-structured orthogonal matrix (deviation {deviation:e})")
            }
            Error::EigenNotConverged { block } => {
                write!(f, "symmetric eigensolver did not converge on block {block}")
            }
            Error::UndefinedEigengap => write!(f, "eigengap is undefined for m = 1"),
            Error::InvalidConfig(what) => write!(f, "invalid configuration: {what}"),
            Error::EmptyDataset => write!(f, "dataset has no samples"),
            Error::ZeroDirection { index } => {
                write!(f, "row {index} is zero and has no direction")
            }
            Error::DegenerateSplit { n, test_fraction } => write!(
                f,
                "split of {n} samples with test fraction {test_fraction} leaves an empty side"
            ),
            Error::InvalidDofLevel(v) => write!(
                f,
                "degrees of freedom {v} is not of the form m(m+1)/2"
            ),
            Error::UnknownTag(tag) => write!(f, "unknown tag `{tag}`"),
            Error::Sample { index, source } => write!(f, "sample {index}: {source}"),
            Error::Diverged => write!(f, "least-squares update produced non-finite parameters"),
            Error::AllRestartsFailed { restarts } => {
                write!(f, "all {restarts} restarts failed")
            }
            Error::NoSurvivingCandidate => write!(f, "every candidate model failed to fit"),
        }
    }
}

impl core::error::Error for Error {}

use alloc::string::String;
use core::fmt;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A caller-supplied argument is outside the operation's domain.
    InvalidArgument(String),
    /// Rejection sampling exceeded its proposal budget.
    SamplingFailure { proposals: u64 },
    /// A declared density violates its bounds or normalization.
    InvalidDensity(String),
    /// A negative degree power was requested on a graph with an isolated vertex.
    DegenerateGraph { vertex: usize },
    /// The graph carries no edge weight, so modularity is undefined.
    EmptyGraph,
    /// The region or domain shape is outside the supported catalog.
    UnsupportedGeometry(String),
    /// The operation only exists in a particular dimension.
    UnsupportedDimension { expected: usize, found: usize },
    /// Exhaustive search was asked for more vertices than it will enumerate.
    TooLarge { n: usize, cap: usize },
    /// Two inputs disagree in length or dimension.
    DimensionMismatch { expected: usize, found: usize },
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::SamplingFailure { proposals } => write!(
                f,
                "rejection sampling gave up after {proposals} proposals; check the density upper bound"
            ),
            Error::InvalidDensity(msg) => write!(f, "invalid density: {msg}"),
            Error::DegenerateGraph { vertex } => write!(
                f,
                "vertex {vertex} is isolated; negative degree powers are undefined (eps below connectivity scale?)"
            ),
            Error::EmptyGraph => write!(f, "graph has zero total weight"),
            Error::UnsupportedGeometry(msg) => write!(f, "unsupported geometry: {msg}"),
            Error::UnsupportedDimension { expected, found } => {
                write!(f, "operation requires dimension {expected}, got {found}")
            }
            Error::TooLarge { n, cap } => {
                write!(f, "instance with n = {n} exceeds the exhaustive search cap {cap}")
            }
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

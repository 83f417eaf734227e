use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors raised by the numerical core.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// A precondition on an input parameter was violated.
    InvalidParameter { name: &'static str, reason: String },
    /// A geometry kind name was not recognised.
    UnknownKind(String),
    /// Coordinates fall outside the device's active region.
    OutOfBounds { site: usize, x: f64, y: f64 },
    /// Two sites share the same position.
    CoincidentSites(usize, usize),
    /// Basis enumeration would exceed the configured memory cap.
    BasisTooLarge { sites: usize, cap: usize },
    /// The constraint graph is not invariant under site reversal.
    NotReflectionSymmetric,
    /// Vector or matrix dimensions do not agree.
    DimensionMismatch { expected: usize, found: usize },
    /// The model cannot act on the supplied basis.
    IncompatibleBasis(&'static str),
    /// State norm drifted beyond tolerance during evolution.
    NormDrift { drift: f64 },
    /// The dense oracle was asked to handle a basis above its size limit.
    OracleTooLarge { dim: usize, limit: usize },
    /// Frequency grids of compared sweeps differ.
    GridMismatch,
    /// Bessel evaluation outside the supported envelope.
    OutsideEnvelope { order: i32, x: f64 },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter { name, reason } => write!(f, "invalid `{name}`: {reason}"),
            Error::UnknownKind(kind) => write!(f, "unknown geometry kind `{kind}`"),
            Error::OutOfBounds { site, x, y } => {
                write!(f, "site {site} at ({x}, {y}) μm lies outside the device region")
            }
            Error::CoincidentSites(a, b) => write!(f, "sites {a} and {b} coincide"),
            Error::BasisTooLarge { sites, cap } => {
                write!(f, "basis for {sites} sites exceeds the cap of {cap} configurations")
            }
            Error::NotReflectionSymmetric => {
                write!(f, "constraint graph is not symmetric under site reversal")
            }
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::IncompatibleBasis(why) => write!(f, "incompatible basis: {why}"),
            Error::NormDrift { drift } => write!(f, "state norm drifted by {drift:e}"),
            Error::OracleTooLarge { dim, limit } => {
                write!(f, "oracle dimension {dim} exceeds limit {limit}")
            }
            Error::GridMismatch => write!(f, "sweeps use different frequency grids"),
            Error::OutsideEnvelope { order, x } => {
                write!(f, "J_{order}({x}) is outside the supported envelope")
            }
        }
    }
}

impl core::error::Error for Error {}

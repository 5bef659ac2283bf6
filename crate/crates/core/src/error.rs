use alloc::string::String;
use core::fmt;

/// Errors reported by the library.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain where the operation is defined.
    Domain(String),
    /// The lattice and domain admit no triangle.
    EmptyMesh,
    /// Input that cannot occur on a valid mesh or configuration.
    Internal(String),
    /// Polygonal pieces that overlap or fail to cover the domain.
    Geometry(String),
    /// A builder precondition was violated.
    Precondition(String),
    /// A crack line passes through a lattice point.
    LatticeAlignment,
    /// A configuration that the requested operation cannot work with.
    Config(String),
    /// The solver produced a non-finite energy.
    NonFinite { iteration: usize, start: usize },
    /// `m̂` was evaluated at a matrix with non-positive determinant.
    Singular,
    /// An initializer that needs a crack was requested but no admissible
    /// crack exists.
    NoCandidate(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::EmptyMesh => write!(f, "lattice spacing too large: no triangle fits in the domain"),
            Error::Internal(msg) => write!(f, "internal error: {msg}"),
            Error::Geometry(msg) => write!(f, "geometry error: {msg}"),
            Error::Precondition(msg) => write!(f, "precondition violated: {msg}"),
            Error::LatticeAlignment => write!(
                f,
                "crack line passes through a lattice point; translate it by a fraction of eps first"
            ),
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::NonFinite { iteration, start } => write!(
                f,
                "non-finite energy at iteration {iteration} of start {start}"
            ),
            Error::Singular => write!(f, "matrix with non-positive determinant"),
            Error::NoCandidate(msg) => write!(f, "no candidate: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

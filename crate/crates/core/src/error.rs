use core::fmt;

/// Errors raised by the numerical core.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Error {
    /// Malformed input to an operation.
    InvalidInput(&'static str),
    /// A query point lies outside the sampled or admissible range.
    OutOfRange,
    /// A rank-one line through the evaluation point has no extent inside
    /// the bounding box.
    DegenerateSegment,
    /// Dimension not supported by the operation.
    UnsupportedDimension(usize),
    /// The energy density is not defined at the requested deformation gradient.
    Inadmissible,
    /// An iterative solver stopped before reaching its tolerance.
    NotConverged { iterations: usize, residual: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::OutOfRange => f.write_str("point outside the admissible range"),
            Error::DegenerateSegment => f.write_str("rank-one segment has zero length inside the box"),
            Error::UnsupportedDimension(d) => write!(f, "unsupported dimension {d}"),
            Error::Inadmissible => f.write_str("energy not defined at this deformation gradient"),
            Error::NotConverged { iterations, residual } => write!(
                f,
                "solver did not converge after {iterations} iterations (relative residual {residual:.3e})"
            ),
        }
    }
}

impl core::error::Error for Error {}

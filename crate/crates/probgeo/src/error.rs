//! Crate-wide error type.

use thiserror::Error;

/// Everything that can go wrong when building grids, fields, and structures
/// on top of them.
#[derive(Debug, Error)]
pub enum Error {
    /// A grid specification violated a structural requirement.
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// A derivative or index referred to an axis the grid does not have.
    #[error("axis {axis} out of range for a {dim}-dimensional grid")]
    AxisOutOfRange { axis: usize, dim: usize },

    /// Field data did not match the grid it was attached to.
    #[error("field has {got} samples but the grid has {expected} points")]
    LengthMismatch { got: usize, expected: usize },

    /// A sample was NaN or infinite.
    #[error("non-finite sample at flat index {index}")]
    NonFinite { index: usize },

    /// Two fields that must share a grid do not.
    #[error("grid mismatch between operands")]
    GridMismatch,

    /// A probability field failed positivity.
    #[error("probability field is negative at flat index {index} (value {value:e})")]
    NegativeProbability { index: usize, value: f64 },

    /// A probability field is too far from unit mass to be silently rescaled.
    #[error("probability mass {mass} deviates from 1 by more than {limit:e}")]
    Normalization { mass: f64, limit: f64 },

    /// An operation needed the probability (or amplitude) to stay above the
    /// node threshold and it did not.
    #[error("node encountered: {0}")]
    Node(String),

    /// A pointwise division hit a zero denominator.
    #[error("division by zero at flat index {index}")]
    DivisionByZero { index: usize },

    /// A scale parameter (alpha, mass, dt, ...) was outside its domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A perturbation violated a precondition (e.g. nonzero total mass).
    #[error("invalid perturbation: {0}")]
    InvalidPerturbation(String),

    /// A finite-dimensional matrix input violated a structural requirement.
    #[error("invalid matrix pair: {0}")]
    InvalidMatrixPair(String),

    /// A time-step violated the stability bound for the chosen integrator.
    #[error("time step {dt:e} exceeds the stability bound {bound:e}")]
    StepTooLarge { dt: f64, bound: f64 },

    /// Two internally computed values that must agree did not.
    #[error("internal consistency failure: {0}")]
    Inconsistent(String),

    /// Configuration text could not be parsed.
    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    /// Filesystem trouble while reading or writing scenario data.
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

//! Shared error type.
//!
//! Every fallible operation in the crate returns [`Result`]. Variants are coarse by
//! design: callers branch on the *kind* of failure (bad input, grid too coarse,
//! extrapolation ladder broke down), while the payload carries the human-readable
//! diagnostics. [`Error::Resolution`] is the one structured variant, because its
//! consumers need the admissible spacing programmatically, not just in a message.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Grid construction or coverage precondition failed.
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// A scalar or vector argument is outside its domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A time or time step that must be positive and finite is not.
    #[error("time must be positive and finite, got {0}")]
    InvalidTime(f64),

    /// A query point lies outside the domain it indexes (e.g. t outside [0, T]).
    #[error("out of range: {0}")]
    OutOfRange(String),

    /// Two fields do not live on the same grid.
    #[error("incompatible grids: {0}")]
    IncompatibleGrids(String),

    /// The quadratic form is singular (or numerically indistinguishable from it).
    #[error("singular form: {0}")]
    SingularForm(String),

    /// A brute-force oracle was asked for an integral it cannot certify.
    #[error("outside oracle domain: {0}")]
    OracleDomain(String),

    /// The regulator ladder did not converge; the message carries the ladder values.
    #[error("extrapolation did not converge: {0}")]
    ConvergenceFailure(String),

    /// Grid spacing too coarse for the oscillation it must resolve.
    /// `required` is the finest spacing that would be admissible.
    #[error("spacing {actual:.3e} too coarse ({context}); need <= {required:.3e}")]
    Resolution {
        required: f64,
        actual: f64,
        context: String,
    },

    /// A user-supplied callback produced a non-finite value.
    #[error("evaluation failure: {0}")]
    EvaluationFailure(String),

    /// An operation was asked of a degenerate object (e.g. the zero field).
    #[error("invalid state: {0}")]
    InvalidState(String),
}

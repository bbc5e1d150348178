use thiserror::Error;

/// Errors raised by the CCS core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Barrier height must be finite and strictly positive.
    #[error("barrier height D must be positive and finite, got {0}")]
    InvalidBarrier(f64),

    /// A basis needs at least one coherent state.
    #[error("basis must contain at least one coherent state")]
    EmptyBasis,

    /// The occupied index does not address a label.
    #[error("occupied index {index} is out of range for {len} labels")]
    InvalidIndex {
        /// Requested index.
        index: usize,
        /// Number of labels.
        len: usize,
    },

    /// Coefficient and label counts differ.
    #[error("{coefficients} coefficients do not match {labels} labels")]
    LengthMismatch {
        /// Number of labels.
        labels: usize,
        /// Number of coefficients.
        coefficients: usize,
    },

    /// Time steps must be finite and strictly positive.
    #[error("time step must be positive and finite, got {0}")]
    InvalidTimeStep(f64),

    /// Regularization must be finite and non-negative.
    #[error("regularization must be non-negative and finite, got {0}")]
    InvalidRegularization(f64),

    /// The regularized overlap system could not be factored.
    #[error("overlap system is singular at t = {t} (condition estimate {condition:e})")]
    SingularSystem {
        /// Time at which the factorization failed.
        t: f64,
        /// Ratio of largest to smallest pivot magnitude.
        condition: f64,
    },

    /// The wavefunction norm left the permitted band.
    #[error("norm drifted to {norm} at t = {t} (allowed relative drift {limit})")]
    NormDrift {
        /// Time of the violation.
        t: f64,
        /// Norm at that time.
        norm: f64,
        /// Relative drift limit.
        limit: f64,
    },
}

/// Result alias for the CCS core.
pub type Result<T> = core::result::Result<T, Error>;

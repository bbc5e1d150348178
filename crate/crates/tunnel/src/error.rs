//! Error type shared by the reference solver, the harness and the CLI.

use std::path::PathBuf;

use thiserror::Error;

/// Errors from the reference solver, the harness and the command line.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid position grid.
    #[error("invalid grid: {0}")]
    Grid(String),

    /// The initial wavepacket is not negligible at the box edge.
    #[error(
        "wavepacket density {amplitude:e} at the grid edge exceeds {limit:e}; enlarge the box"
    )]
    TailAtEdge {
        /// Largest edge density.
        amplitude: f64,
        /// Permitted density.
        limit: f64,
    },

    /// Requested output times do not fit the time step.
    #[error("time {t} is not a forward multiple of the step {dt} from {from}")]
    Incommensurate {
        /// Requested time.
        t: f64,
        /// Time step.
        dt: f64,
        /// Current time.
        from: f64,
    },

    /// Imaginary-time relaxation ran out of budget.
    #[error("imaginary-time relaxation did not converge within {budget} time units (last relative change {change:e})")]
    NotConverged {
        /// Imaginary-time budget.
        budget: f64,
        /// Last relative energy change per unit time.
        change: f64,
    },

    /// Malformed configuration.
    #[error("config line {line}: {message}")]
    Config {
        /// 1-based line number, 0 for whole-file problems.
        line: usize,
        /// Description.
        message: String,
    },

    /// Invalid command-line or config values.
    #[error("{0}")]
    Invalid(String),

    /// File system failure.
    #[error("{path}: {source}")]
    Io {
        /// Offending path.
        path: PathBuf,
        /// Underlying error.
        #[source]
        source: std::io::Error,
    },

    /// Failure inside the CCS propagation.
    #[error(transparent)]
    Numerical(#[from] ccs_core::Error),
}

impl Error {
    /// Process exit status: 1 for usage and configuration problems (including
    /// invalid physical parameters), 2 for numerical aborts.
    pub fn exit_code(&self) -> i32 {
        use ccs_core::Error as Core;
        match self {
            Error::Numerical(Core::SingularSystem { .. } | Core::NormDrift { .. }) => 2,
            Error::NotConverged { .. } => 2,
            _ => 1,
        }
    }

    /// Wraps an IO failure with the path it concerns.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// Result alias for this crate.
pub type Result<T> = std::result::Result<T, Error>;

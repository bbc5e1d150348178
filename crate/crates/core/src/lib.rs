//! Coupled coherent states (CCS) for tunneling in a one-dimensional quartic
//! double well.
//!
//! The wavefunction is expanded in Glauber coherent states whose centers follow
//! uncoupled classical trajectories of the normal-ordered Hamiltonian, while the
//! expansion coefficients obey the variationally coupled linear system with a
//! regularized overlap matrix.
//!
//! Units are dimensionless with `hbar = m = omega = 1`, so a coherent-state label
//! is `z = (q + i p) / sqrt(2)`.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the grid-based
//! reference solver and the command line live in the `ccs-tunnel` crate.
#![no_std]
#![warn(missing_docs)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod ccs;
pub mod classical;
pub mod coherent;
mod error;
mod linalg;
pub mod model;

pub use num_complex::Complex64;

pub use ccs::{CcsPropagator, CcsState};
pub use classical::TrajectorySet;
pub use coherent::{CsLabel, GramMatrix};
pub use error::{Error, Result};
pub use model::{ClassicalHamiltonian, Harmonic, Landmarks, Shifted, WellParams};

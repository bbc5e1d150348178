//! Tunneling experiments for the quartic double well: a grid-based
//! split-operator reference solver, scenario configuration, joint runs with
//! the coupled coherent states propagator from `ccs_core`, and CSV output.

#![warn(missing_docs)]

pub mod csv;
pub mod error;
pub mod harness;
pub mod reference;

pub use error::{Error, Result};
pub use harness::{run_scenario, simulate, ExperimentConfig, Outcome, Scenario};
pub use reference::{
    tunneling_splitting, Grid, Potential, ReferenceState, SplitOperator, Splitting,
};

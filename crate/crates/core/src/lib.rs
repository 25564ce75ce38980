//! Simulation and local-realism verification of the two-photon,
//! four-dimensional all-versus-nothing experiment.

pub mod apparatus;
pub mod cli;
pub mod error;
pub mod experiment;
pub mod lhv;
pub mod observables;
pub mod published;
pub mod qstate;
pub mod render;
pub mod source;

pub use error::{AvnError, Result};

//! Quantum discord and atomic inversion dynamics of a thermal two-level atom
//! resonantly coupled to a single cavity mode prepared in a Fock state.
//!
//! [`closed_form`] and [`measurement`] give the analytic path, [`oracle`] an
//! independent brute-force numerical path, and [`analysis`] extracts
//! oscillation and beat periods from sampled curves.

pub mod analysis;
pub mod cli;
pub mod closed_form;
pub mod density;
pub mod entropy;
pub mod error;
pub mod measurement;
pub mod oracle;

pub use error::{Error, Result};

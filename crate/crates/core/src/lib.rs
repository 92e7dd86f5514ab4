//! Simulation-based discrete stochastic optimization of epidemic
//! intervention strategies.
//!
//! The crate is organized around a constrained discrete SPSA recursion
//! ([`dspsa`]) that minimizes a noisy loss measured by running a
//! desk-scale stochastic epidemic simulator ([`sim`]) through an
//! economic loss function ([`cost`]). The [`codec`] module maps integer
//! decision vectors to domain intervention plans and back, and
//! [`campaign`] orchestrates multi-trial experiments, confidence
//! intervals, baseline comparisons and common-random-number probes.

pub mod campaign;
pub mod codec;
pub mod cost;
pub mod dspsa;
pub mod error;
pub mod scenario;
pub mod seed;
pub mod sim;
pub mod trace;

pub use error::{Error, OracleError};

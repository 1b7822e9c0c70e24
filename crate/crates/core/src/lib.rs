//! Upper bounds on fault-tolerant thresholds for two-qubit entanglement
//! purification under adversarial local gate noise.
//!
//! The crate is organized bottom-up:
//!
//! * [`bell`] - Bell-diagonal states, Pauli action, entropy of formation and
//!   concurrence.
//! * [`noise`] - fidelities produced by preparation noise, gate noise and loss.
//! * [`threshold`] - n-apex solver, threshold maximization, region boundaries
//!   and the loss trade-off.
//! * [`adversarial`] - exact-channel check that Pauli errors are the most
//!   destructive one-sided unitary noise.
//! * [`protocol`] - exact simulation of recursive BBPSSW / DEJMPS purification.
//! * [`output`] - CSV / JSON tables used by the command-line front end.

pub mod adversarial;
pub mod bell;
pub mod error;
pub mod linalg;
pub mod noise;
pub mod output;
pub mod protocol;
pub mod solve;
pub mod threshold;

pub use error::{Error, Result};

//! Exact simulator of the qutrit and qubit Quanty-Hall key-distribution
//! protocols: the quantum Monty Hall game turned into a key exchange, with
//! Bell-inequality eavesdropper detection and intercept-and-resend attacks.

pub mod adversary;
pub mod bell;
pub mod error;
pub mod figures;
pub mod qcore;
pub mod qubit;
pub mod qutrit;
pub mod session;
pub mod types;
pub mod verify;

pub use error::{Error, Result};
pub use types::{Protocol, ResidualId, Strategy, Switch};

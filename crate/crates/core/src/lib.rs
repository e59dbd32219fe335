//! Simulation, compilation and adversarial optimization of distributed
//! quantum interactive proofs.

pub mod cli;
pub mod compile;
pub mod dam;
pub mod dqct;
pub mod error;
pub mod ghz;
pub mod network;
pub mod protocol;
pub mod prover;
pub mod qcore;

pub use error::{Error, Result};

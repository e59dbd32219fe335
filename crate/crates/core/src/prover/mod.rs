//! Adversarial prover search: see-saw over per-turn unitaries and the exact
//! optimum for single-message protocols.

mod seesaw;
mod single;

pub use seesaw::{seesaw_optimize, seesaw_optimize_from, OptimizerConfig, OptimizerTrace, RestartTrace};
pub use single::exact_single_message_max;

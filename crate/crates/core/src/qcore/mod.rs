//! Dense state-vector engine.
//!
//! Qubit `q` of a register is bit `q` of the basis index (little-endian).

mod density;
mod gate;
pub(crate) mod kernel;
mod random;
mod state;

pub use density::{fidelity, trace_distance, DensityOperator};
pub use gate::Gate;
pub use random::{haar_random_state, haar_random_unitary};
pub use state::{apply_unitary, projector_probability, QuantumState};

pub(crate) use density::hermitian_eigenvalues;
pub(crate) use random::{haar_unitary_with, rng};
pub(crate) use state::check_targets;

pub type C64 = num_complex::Complex64;

pub const UNITARY_TOL: f64 = 1e-10;

/// Allowed `||U^dag U - I||` for a `dim`-dimensional gate; round-off in the
/// Frobenius norm grows with the dimension.
pub fn unitarity_tolerance(dim: usize) -> f64 {
    UNITARY_TOL * (dim as f64).max(1.0)
}
pub const NORM_TOL: f64 = 1e-10;

/// Largest register the dense engine accepts.
pub const QUBIT_CEILING: usize = 22;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Gate, QuantumState, C64};
use crate::error::{Error, Result};

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub(crate) fn complex_normal(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im)
}

/// Haar-random pure state from a normalized complex Gaussian vector.
pub fn haar_random_state(num_qubits: usize, seed: u64) -> Result<QuantumState> {
    haar_state_with(num_qubits, &mut rng(seed))
}

pub(crate) fn haar_state_with(num_qubits: usize, rng: &mut ChaCha8Rng) -> Result<QuantumState> {
    if num_qubits == 0 {
        return Err(Error::Validation("need at least one qubit".into()));
    }
    let v: Vec<C64> = (0..1usize << num_qubits).map(|_| complex_normal(rng)).collect();
    QuantumState::normalized(v)
}

/// Haar-random unitary: QR of a complex Gaussian matrix with the phases of
/// `R`'s diagonal pushed into `Q`.
pub fn haar_random_unitary(num_qubits: usize, seed: u64) -> Result<Gate> {
    haar_unitary_with(num_qubits, &mut rng(seed))
}

pub(crate) fn haar_unitary_with(num_qubits: usize, rng: &mut ChaCha8Rng) -> Result<Gate> {
    if num_qubits == 0 {
        return Err(Error::Validation("need at least one qubit".into()));
    }
    let dim = 1usize << num_qubits;
    let g = DMatrix::from_fn(dim, dim, |_, _| complex_normal(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= ph;
        }
    }
    Gate::from_matrix(num_qubits, q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_for_seed() {
        let a = haar_random_state(1, 7).unwrap();
        let b = haar_random_state(1, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, haar_random_state(1, 8).unwrap());
    }

    #[test]
    fn unitaries_are_unitary() {
        for seed in 0..5 {
            let u = haar_random_unitary(2, seed).unwrap();
            assert!(u.unitarity_error() <= 1e-10);
        }
    }

    #[test]
    fn first_moment_matches_haar() {
        // E|<0|psi>|^2 = 1/2 for one qubit
        let n = 10_000;
        let mean: f64 = (0..n)
            .map(|s| haar_random_state(1, s).unwrap().amplitudes()[0].norm_sqr())
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.5).abs() < 0.02, "mean {mean}");
    }
}

//! GHZ and star graph states, the two stabilizer tests of the star coloring,
//! and the five-turn protocol that certifies a GHZ state across a network.

mod protocol;

pub use protocol::{build_pghz, ghz_output_fidelity, ghz_output_qubits, GhzProtocolParams};
pub(crate) use protocol::Pghz;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{Gate, QuantumState, C64};

fn require_nodes(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Validation(format!("need at least 2 qubits, got {n}")));
    }
    Ok(())
}

/// `(|0^n> + |1^n>) / sqrt 2`.
pub fn ghz_state(n: usize) -> Result<QuantumState> {
    require_nodes(n)?;
    let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
    let a = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    amps[0] = a;
    amps[(1 << n) - 1] = a;
    QuantumState::from_amplitudes(amps)
}

/// Graph state of the star centered on qubit 0: CZ from the center to every
/// leaf applied to `|+>^n`.
pub fn star_state(n: usize) -> Result<QuantumState> {
    require_nodes(n)?;
    let mut s = QuantumState::zero(n);
    for q in 0..n {
        s.apply(&Gate::h(), &[q])?;
    }
    for leaf in 1..n {
        s.apply(&Gate::cz(), &[0, leaf])?;
    }
    Ok(s)
}

/// Single-qubit measurement basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    X,
    Z,
}

/// Classical rule applied to the outcome bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predicate {
    /// The outcomes sum to 0 mod 2.
    EvenParity,
    /// All outcomes coincide.
    AllEqual,
}

impl Predicate {
    pub fn holds(&self, outcomes: &[bool]) -> bool {
        match self {
            Predicate::EvenParity => outcomes.iter().filter(|&&b| b).count() % 2 == 0,
            Predicate::AllEqual => outcomes.windows(2).all(|w| w[0] == w[1]),
        }
    }
}

/// One color class of the star: the projector onto the joint +1 eigenspace
/// of its stabilizers, and the local measurement realizing it. Outcome 0
/// stands for `|0>` or `|+>`.
#[derive(Clone, Debug, PartialEq)]
pub struct StabilizerTest {
    pub color: usize,
    pub projector: DMatrix<C64>,
    pub bases: Vec<Basis>,
    pub predicate: Predicate,
}

impl StabilizerTest {
    pub fn num_qubits(&self) -> usize {
        self.bases.len()
    }

    /// Probability that measuring `state` in [`Self::bases`] passes the predicate.
    pub fn pass_probability(&self, state: &QuantumState) -> Result<f64> {
        let n = self.num_qubits();
        if state.num_qubits() != n {
            return Err(Error::Layout(format!(
                "test on {n} qubits applied to a {}-qubit state",
                state.num_qubits()
            )));
        }
        let mut s = state.clone();
        for (q, b) in self.bases.iter().enumerate() {
            if *b == Basis::X {
                s.apply(&Gate::h(), &[q])?;
            }
        }
        let mut p = 0.0;
        let mut bits = vec![false; n];
        for (x, a) in s.amplitudes().iter().enumerate() {
            for (q, b) in bits.iter_mut().enumerate() {
                *b = (x >> q) & 1 == 1;
            }
            if self.predicate.holds(&bits) {
                p += a.norm_sqr();
            }
        }
        Ok(p)
    }

    /// `<psi|P|psi>`.
    pub fn expectation(&self, state: &QuantumState) -> Result<f64> {
        let dim = self.projector.nrows();
        if state.amplitudes().len() != dim {
            return Err(Error::Layout("state and projector dimensions differ".into()));
        }
        let v = nalgebra::DVector::from_column_slice(state.amplitudes());
        Ok((v.adjoint() * &self.projector * &v)[(0, 0)].re)
    }
}

/// Stabilizer `X_u Z_{N(u)}` of the star with center 0.
fn star_stabilizer(n: usize, u: usize) -> DMatrix<C64> {
    let dim = 1usize << n;
    let neighbors: Vec<usize> = if u == 0 { (1..n).collect() } else { vec![0] };
    let mut k = DMatrix::zeros(dim, dim);
    for y in 0..dim {
        let flips = neighbors.iter().filter(|&&v| (y >> v) & 1 == 1).count();
        let sign = if flips % 2 == 0 { 1.0 } else { -1.0 };
        k[(y ^ (1 << u), y)] = C64::new(sign, 0.0);
    }
    k
}

/// The tests for the two colors of the star: color 0 is the center
/// (measured in X, leaves in Z, even parity), color 1 the leaves (center in
/// Z, leaves in X, all outcomes equal).
pub fn stabilizer_tests(n: usize) -> Result<(StabilizerTest, StabilizerTest)> {
    require_nodes(n)?;
    let dim = 1usize << n;
    let id = DMatrix::<C64>::identity(dim, dim);
    let half = C64::new(0.5, 0.0);
    let factor = |u: usize| (&id + star_stabilizer(n, u)) * half;
    let p0 = factor(0);
    let p1 = (1..n).fold(id.clone(), |acc, u| acc * factor(u));
    let mut b0 = vec![Basis::Z; n];
    b0[0] = Basis::X;
    let mut b1 = vec![Basis::X; n];
    b1[0] = Basis::Z;
    Ok((
        StabilizerTest {
            color: 0,
            projector: p0,
            bases: b0,
            predicate: Predicate::EvenParity,
        },
        StabilizerTest {
            color: 1,
            projector: p1,
            bases: b1,
            predicate: Predicate::AllEqual,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_sizes_rejected() {
        assert_eq!(ghz_state(1).unwrap_err().kind(), "validation");
        assert_eq!(star_state(0).unwrap_err().kind(), "validation");
        assert!(stabilizer_tests(1).is_err());
    }

    #[test]
    fn predicates() {
        assert!(Predicate::EvenParity.holds(&[true, true, false]));
        assert!(!Predicate::EvenParity.holds(&[true]));
        assert!(Predicate::AllEqual.holds(&[true, true]));
        assert!(!Predicate::AllEqual.holds(&[false, true]));
    }
}

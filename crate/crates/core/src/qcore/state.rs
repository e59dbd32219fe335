use nalgebra::DMatrix;

use super::density::DensityOperator;
use super::gate::Gate;
use super::kernel;
use super::{C64, NORM_TOL};
use crate::error::{Error, Result};

/// Normalized pure state over a little-endian qubit layout: bit `q` of a
/// basis index is qubit `q`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    num_qubits: usize,
    amplitudes: Vec<C64>,
}

pub(crate) fn check_targets(targets: &[usize], num_qubits: usize) -> Result<()> {
    for (i, &t) in targets.iter().enumerate() {
        if t >= num_qubits {
            return Err(Error::Layout(format!(
                "qubit {t} out of range for {num_qubits} qubits"
            )));
        }
        if targets[..i].contains(&t) {
            return Err(Error::Layout(format!("duplicate qubit {t}")));
        }
    }
    Ok(())
}

impl QuantumState {
    /// `|0...0>` on `num_qubits` qubits.
    pub fn zero(num_qubits: usize) -> Self {
        let mut amplitudes = vec![C64::new(0.0, 0.0); 1 << num_qubits];
        amplitudes[0] = C64::new(1.0, 0.0);
        QuantumState {
            num_qubits,
            amplitudes,
        }
    }

    /// Computational basis state `|index>`.
    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        if index >= 1 << num_qubits {
            return Err(Error::Layout(format!(
                "basis index {index} out of range for {num_qubits} qubits"
            )));
        }
        let mut s = Self::zero(num_qubits);
        s.amplitudes[0] = C64::new(0.0, 0.0);
        s.amplitudes[index] = C64::new(1.0, 0.0);
        Ok(s)
    }

    /// Wraps an amplitude vector whose norm must already be 1 within 1e-10.
    pub fn from_amplitudes(amplitudes: Vec<C64>) -> Result<Self> {
        let len = amplitudes.len();
        if !len.is_power_of_two() {
            return Err(Error::Validation(format!(
                "amplitude vector length {len} is not a power of two"
            )));
        }
        let norm = kernel::norm_sqr(&amplitudes).sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Validation(format!("state norm is {norm}, expected 1")));
        }
        Ok(QuantumState {
            num_qubits: len.trailing_zeros() as usize,
            amplitudes,
        })
    }

    /// Normalizes an arbitrary nonzero vector.
    pub fn normalized(mut amplitudes: Vec<C64>) -> Result<Self> {
        let norm = kernel::norm_sqr(&amplitudes).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Validation("cannot normalize a zero vector".into()));
        }
        for a in &mut amplitudes {
            *a /= norm;
        }
        Self::from_amplitudes(amplitudes)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        kernel::norm_sqr(&self.amplitudes).sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &QuantumState) -> Result<C64> {
        if self.num_qubits != other.num_qubits {
            return Err(Error::Validation("inner product of mismatched states".into()));
        }
        Ok(kernel::inner(&self.amplitudes, &other.amplitudes))
    }

    /// `self ⊗ high`: `self` keeps the low qubit indices.
    pub fn tensor(&self, high: &QuantumState) -> QuantumState {
        let mut amplitudes = Vec::with_capacity(self.amplitudes.len() * high.amplitudes.len());
        for h in &high.amplitudes {
            for l in &self.amplitudes {
                amplitudes.push(l * h);
            }
        }
        QuantumState {
            num_qubits: self.num_qubits + high.num_qubits,
            amplitudes,
        }
    }

    /// Applies `gate` to `targets` (identity elsewhere).
    pub fn apply(&mut self, gate: &Gate, targets: &[usize]) -> Result<()> {
        self.apply_controlled(gate, targets, &[])
    }

    /// Applies `gate` on the subspace where each control qubit has the given value.
    pub fn apply_controlled(
        &mut self,
        gate: &Gate,
        targets: &[usize],
        controls: &[(usize, bool)],
    ) -> Result<()> {
        if targets.len() != gate.arity() {
            return Err(Error::Layout(format!(
                "gate of arity {} applied to {} targets",
                gate.arity(),
                targets.len()
            )));
        }
        let mut all: Vec<usize> = targets.to_vec();
        all.extend(controls.iter().map(|c| c.0));
        check_targets(&all, self.num_qubits)?;
        kernel::apply_matrix(&mut self.amplitudes, gate.matrix(), targets, controls);
        Ok(())
    }

    /// Probability that measuring `qubit` yields 1.
    pub fn prob_one(&self, qubit: usize) -> f64 {
        let bit = 1usize << qubit;
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| i & bit != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Reduced state on `keep`; the reduced index has `keep[0]` as its lowest bit.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityOperator> {
        check_targets(keep, self.num_qubits)?;
        let m = kernel::partial_outer(&self.amplitudes, &self.amplitudes, keep);
        Ok(DensityOperator::from_matrix_unchecked(keep.len(), m))
    }

    pub fn to_density(&self) -> DensityOperator {
        let v = nalgebra::DVector::from_column_slice(&self.amplitudes);
        DensityOperator::from_matrix_unchecked(self.num_qubits, &v * v.adjoint())
    }
}

/// Applies `gate` to `targets` of `state`, returning the new state.
pub fn apply_unitary(state: &QuantumState, gate: &Gate, targets: &[usize]) -> Result<QuantumState> {
    let mut out = state.clone();
    out.apply(gate, targets)?;
    Ok(out)
}

/// `<state| Π |state>` with `projector` acting on `targets`.
pub fn projector_probability(
    state: &QuantumState,
    projector: &DMatrix<C64>,
    targets: &[usize],
) -> Result<f64> {
    let dim = 1usize << targets.len();
    if projector.nrows() != dim || projector.ncols() != dim {
        return Err(Error::Layout(format!(
            "projector of size {}x{} does not match {} targets",
            projector.nrows(),
            projector.ncols(),
            targets.len()
        )));
    }
    check_targets(targets, state.num_qubits())?;
    if (projector * projector - projector).norm() > 1e-9 {
        return Err(Error::Validation("operator is not idempotent".into()));
    }
    if (projector.adjoint() - projector).norm() > 1e-9 {
        return Err(Error::Validation("operator is not Hermitian".into()));
    }
    let rho = kernel::partial_outer(state.amplitudes(), state.amplitudes(), targets);
    let p = (projector * rho).trace().re;
    Ok(p.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn hadamard_on_zero() {
        let s = apply_unitary(&QuantumState::zero(1), &Gate::h(), &[0]).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amplitudes()[0] - c(r)).norm() < 1e-15);
        assert!((s.amplitudes()[1] - c(r)).norm() < 1e-15);
    }

    #[test]
    fn t_c_on_zero() {
        let s = apply_unitary(&QuantumState::zero(1), &Gate::t_c(0.36).unwrap(), &[0]).unwrap();
        assert!((s.amplitudes()[0] - c(0.6)).norm() < 1e-15);
        assert!((s.amplitudes()[1] - c(-0.8)).norm() < 1e-15);
    }

    #[test]
    fn bad_targets() {
        let mut s = QuantumState::zero(2);
        assert!(matches!(s.apply(&Gate::h(), &[2]), Err(Error::Layout(_))));
        assert!(matches!(s.apply(&Gate::cnot(), &[1, 1]), Err(Error::Layout(_))));
        assert!(matches!(s.apply(&Gate::cnot(), &[1]), Err(Error::Layout(_))));
    }

    #[test]
    fn bell_reduction_is_maximally_mixed() {
        let mut s = QuantumState::zero(2);
        s.apply(&Gate::h(), &[0]).unwrap();
        s.apply(&Gate::cnot(), &[0, 1]).unwrap();
        let rho = s.partial_trace(&[0]).unwrap();
        let m = rho.matrix();
        assert!((m[(0, 0)] - c(0.5)).norm() < 1e-12);
        assert!((m[(1, 1)] - c(0.5)).norm() < 1e-12);
        assert!(m[(0, 1)].norm() < 1e-12);
    }

    #[test]
    fn empty_keep_is_scalar_one() {
        let s = QuantumState::zero(3);
        let rho = s.partial_trace(&[]).unwrap();
        assert_eq!(rho.matrix().nrows(), 1);
        assert!((rho.matrix()[(0, 0)] - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn ghz3_two_qubit_marginal() {
        // independent route: build the 8-vector by hand and sum out qubit 2
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mut amps = vec![c(0.0); 8];
        amps[0] = c(r);
        amps[7] = c(r);
        let s = QuantumState::from_amplitudes(amps.clone()).unwrap();
        let rho = s.partial_trace(&[0, 1]).unwrap();
        let mut expected = DMatrix::<C64>::zeros(4, 4);
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..2 {
                    expected[(i, j)] += amps[i + 4 * k] * amps[j + 4 * k].conj();
                }
            }
        }
        assert!((rho.matrix() - &expected).norm() < 1e-12);
        assert!((expected[(0, 0)] - c(0.5)).norm() < 1e-12);
        assert!((expected[(3, 3)] - c(0.5)).norm() < 1e-12);
    }

    #[test]
    fn projector_examples() {
        let plus = apply_unitary(&QuantumState::zero(1), &Gate::h(), &[0]).unwrap();
        let p0 = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(0.0)]);
        assert!((projector_probability(&plus, &p0, &[0]).unwrap() - 0.5).abs() < 1e-12);

        let mut s = QuantumState::zero(2);
        s.apply(&Gate::ry(1.1), &[1]).unwrap();
        // local index: bit 0 = qubit 0 is the low factor, so |0><0| on qubit 0 is I ⊗ |0><0|
        let p_low = DMatrix::<C64>::identity(2, 2).kronecker(&p0);
        assert!((projector_probability(&s, &p_low, &[0, 1]).unwrap() - 1.0).abs() < 1e-12);
        let not_idem = DMatrix::from_element(2, 2, c(1.0));
        assert!(projector_probability(&plus, &not_idem, &[0]).is_err());
    }
}

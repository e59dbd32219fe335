use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::C64;
use crate::error::{Error, Result};

const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;
/// Eigenvalues below zero are clamped; anything below this is an error.
const PSD_TOL: f64 = -1e-9;
const RANK_TOL: f64 = 1e-15;

/// Mixed state on `num_qubits` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    num_qubits: usize,
    matrix: DMatrix<C64>,
}

impl DensityOperator {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn from_matrix(num_qubits: usize, matrix: DMatrix<C64>) -> Result<Self> {
        let rho = Self::from_matrix_unchecked(num_qubits, matrix);
        let dim = 1usize << num_qubits;
        if rho.matrix.nrows() != dim || rho.matrix.ncols() != dim {
            return Err(Error::Validation(format!(
                "density operator on {num_qubits} qubits must be {dim}x{dim}"
            )));
        }
        if (rho.matrix.adjoint() - &rho.matrix).norm() > HERMITIAN_TOL {
            return Err(Error::Validation("density operator is not Hermitian".into()));
        }
        let tr = rho.matrix.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::Validation(format!("density operator trace is {tr}")));
        }
        let min = hermitian_eigenvalues(&rho.matrix)
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min < PSD_TOL {
            return Err(Error::Validation(format!(
                "density operator has eigenvalue {min:.3e}"
            )));
        }
        Ok(rho)
    }

    pub(crate) fn from_matrix_unchecked(num_qubits: usize, matrix: DMatrix<C64>) -> Self {
        DensityOperator { num_qubits, matrix }
    }

    /// Convex mixture `sum_i w_i |psi_i><psi_i|` of normalized vectors.
    pub fn mixture(num_qubits: usize, parts: &[(f64, &[C64])]) -> Result<Self> {
        let dim = 1usize << num_qubits;
        let mut m = DMatrix::zeros(dim, dim);
        for (w, v) in parts {
            let v = DVector::from_column_slice(v);
            m += v.clone() * v.adjoint() * C64::new(*w, 0.0);
        }
        Self::from_matrix(num_qubits, m)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// Reduces onto `keep` (indices local to this operator, `keep[0]` lowest).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityOperator> {
        super::state::check_targets(keep, self.num_qubits)?;
        let n = self.num_qubits;
        let rest: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
        let k = keep.len();
        let dk = 1usize << k;
        let mut out = DMatrix::zeros(dk, dk);
        let spread = |local: usize, qubits: &[usize]| -> usize {
            qubits
                .iter()
                .enumerate()
                .filter(|(j, _)| (local >> j) & 1 == 1)
                .map(|(_, &q)| 1usize << q)
                .sum()
        };
        for r in 0..(1usize << rest.len()) {
            let ro = spread(r, &rest);
            for i in 0..dk {
                let gi = ro + spread(i, keep);
                for j in 0..dk {
                    let gj = ro + spread(j, keep);
                    out[(i, j)] += self.matrix[(gi, gj)];
                }
            }
        }
        Ok(DensityOperator::from_matrix_unchecked(k, out))
    }
}

pub(crate) fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    SymmetricEigen::new(h).eigenvalues.iter().cloned().collect()
}

/// Square root of a PSD Hermitian matrix via eigendecomposition.
fn psd_sqrt(m: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(h);
    let mut vals = Vec::with_capacity(eig.eigenvalues.len());
    for &l in eig.eigenvalues.iter() {
        if l < PSD_TOL {
            return Err(Error::Validation(format!(
                "matrix is not positive semidefinite (eigenvalue {l:.3e})"
            )));
        }
        // eigenvalues at round-off level are zero; their square roots are not
        let l = if l < RANK_TOL * m.nrows() as f64 { 0.0 } else { l };
        vals.push(C64::new(l.sqrt(), 0.0));
    }
    let d = DMatrix::from_diagonal(&DVector::from_vec(vals));
    Ok(&eig.eigenvectors * d * eig.eigenvectors.adjoint())
}

fn check_dims(rho: &DensityOperator, sigma: &DensityOperator) -> Result<()> {
    if rho.matrix.shape() != sigma.matrix.shape() {
        return Err(Error::Validation(format!(
            "dimension mismatch: {:?} vs {:?}",
            rho.matrix.shape(),
            sigma.matrix.shape()
        )));
    }
    Ok(())
}

/// `F(rho, sigma) = tr sqrt(sqrt(rho) sigma sqrt(rho))`, clamped to [0, 1].
/// Computed as the trace norm of `sqrt(rho) sqrt(sigma)`.
pub fn fidelity(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    check_dims(rho, sigma)?;
    let product = psd_sqrt(&rho.matrix)? * psd_sqrt(&sigma.matrix)?;
    let f: f64 = product.singular_values().iter().sum();
    Ok(f.clamp(0.0, 1.0))
}

/// `dist(rho, sigma) = ||rho - sigma||_tr / 2`.
pub fn trace_distance(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    check_dims(rho, sigma)?;
    let diff = &rho.matrix - &sigma.matrix;
    let d: f64 = hermitian_eigenvalues(&diff).iter().map(|l| l.abs()).sum();
    Ok((0.5 * d).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{Gate, QuantumState};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn pure(s: &QuantumState) -> DensityOperator {
        s.to_density()
    }

    #[test]
    fn fidelity_examples() {
        let zero = QuantumState::zero(1);
        let one = QuantumState::basis(1, 1).unwrap();
        assert!((fidelity(&pure(&zero), &pure(&zero)).unwrap() - 1.0).abs() < 1e-12);
        assert!(fidelity(&pure(&zero), &pure(&one)).unwrap() < 1e-7);
        let mixed = DensityOperator::from_matrix(
            1,
            DMatrix::from_row_slice(2, 2, &[c(0.5), c(0.0), c(0.0), c(0.5)]),
        )
        .unwrap();
        // closed form: tr sqrt(|0><0| I/2 |0><0|) = sqrt(1/2)
        let f = fidelity(&pure(&zero), &mixed).unwrap();
        assert!((f - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
        let f2 = fidelity(&mixed, &pure(&zero)).unwrap();
        assert!((f - f2).abs() < 1e-8);
    }

    #[test]
    fn trace_distance_examples() {
        let zero = QuantumState::zero(1);
        let one = QuantumState::basis(1, 1).unwrap();
        let mut plus = QuantumState::zero(1);
        plus.apply(&Gate::h(), &[0]).unwrap();
        assert!(trace_distance(&pure(&zero), &pure(&zero)).unwrap() < 1e-12);
        assert!((trace_distance(&pure(&zero), &pure(&one)).unwrap() - 1.0).abs() < 1e-12);
        // |0><0| - |+><+| = [[1/2, -1/2], [-1/2, -1/2]] has eigenvalues ±1/sqrt(2)
        let d = trace_distance(&pure(&zero), &pure(&plus)).unwrap();
        assert!((d - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        let a = QuantumState::zero(1).to_density();
        let b = QuantumState::zero(2).to_density();
        assert!(fidelity(&a, &b).is_err());
        assert!(trace_distance(&a, &b).is_err());
    }

    #[test]
    fn density_partial_trace_matches_state_route() {
        let s = crate::qcore::haar_random_state(3, 11).unwrap();
        let via_state = s.partial_trace(&[2, 0]).unwrap();
        let via_density = s.to_density().partial_trace(&[2, 0]).unwrap();
        assert!((via_state.matrix() - via_density.matrix()).norm() < 1e-12);
    }

    #[test]
    fn invalid_density_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[c(1.5), c(0.0), c(0.0), c(-0.5)]);
        assert!(DensityOperator::from_matrix(1, m).is_err());
    }
}

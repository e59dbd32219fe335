use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{unitarity_tolerance, C64};
use crate::error::{Error, Result};

/// A unitary acting on `arity` qubits.
///
/// Local basis convention: bit `j` of a row/column index addresses the `j`-th
/// entry of the target list the gate is applied with. This is the same
/// little-endian convention the global state uses, so a gate applied to
/// targets `[0, 1, ..]` of a register acts on the register's own index.
#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    arity: usize,
    matrix: DMatrix<C64>,
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

impl Gate {
    /// Builds a gate and checks `U†U = I` within 1e-10.
    pub fn from_matrix(arity: usize, matrix: DMatrix<C64>) -> Result<Self> {
        let gate = Self::from_matrix_unchecked(arity, matrix)?;
        let err = gate.unitarity_error();
        if err > unitarity_tolerance(gate.dim()) {
            return Err(Error::Validation(format!(
                "matrix is not unitary (||U^dag U - I|| = {err:.3e})"
            )));
        }
        Ok(gate)
    }

    /// Builds a gate checking only the dimensions.
    pub(crate) fn from_matrix_unchecked(arity: usize, matrix: DMatrix<C64>) -> Result<Self> {
        let dim = 1usize << arity;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::Validation(format!(
                "gate of arity {arity} needs a {dim}x{dim} matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Gate { arity, matrix })
    }

    /// Permutation gate `|i> -> |perm(i)>` on local indices.
    pub fn from_permutation(arity: usize, perm: impl Fn(usize) -> usize) -> Self {
        let dim = 1usize << arity;
        let mut m = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            m[(perm(i), i)] = c(1.0);
        }
        Gate { arity, matrix: m }
    }

    pub fn identity(arity: usize) -> Self {
        let dim = 1usize << arity;
        Gate {
            arity,
            matrix: DMatrix::identity(dim, dim),
        }
    }

    pub fn h() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Gate {
            arity: 1,
            matrix: DMatrix::from_row_slice(2, 2, &[c(s), c(s), c(s), c(-s)]),
        }
    }

    pub fn x() -> Self {
        Self::from_permutation(1, |i| i ^ 1)
    }

    pub fn z() -> Self {
        Self::phase(std::f64::consts::PI)
    }

    /// `diag(1, e^{i theta})`.
    pub fn phase(theta: f64) -> Self {
        Self::diagonal(&[c(1.0), C64::from_polar(1.0, theta)])
    }

    pub fn diagonal(entries: &[C64]) -> Self {
        let dim = entries.len();
        assert!(dim.is_power_of_two(), "diagonal length must be a power of two");
        Gate {
            arity: dim.trailing_zeros() as usize,
            matrix: DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(entries)),
        }
    }

    /// Rotation `exp(-i theta Y / 2)`.
    pub fn ry(theta: f64) -> Self {
        let (s, co) = (theta / 2.0).sin_cos();
        Gate {
            arity: 1,
            matrix: DMatrix::from_row_slice(2, 2, &[c(co), c(-s), c(s), c(co)]),
        }
    }

    /// `T_c|0> = sqrt(c)|0> - sqrt(1-c)|1>`, `T_c|1> = sqrt(1-c)|0> + sqrt(c)|1>`.
    pub fn t_c(acceptance: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&acceptance) {
            return Err(Error::Validation(format!(
                "T_c needs c in [0,1], got {acceptance}"
            )));
        }
        let a = acceptance.sqrt();
        let b = (1.0 - acceptance).sqrt();
        // columns are the images of |0> and |1>
        Ok(Gate {
            arity: 1,
            matrix: DMatrix::from_row_slice(2, 2, &[c(a), c(b), c(-b), c(a)]),
        })
    }

    /// CNOT with targets `[control, target]`.
    pub fn cnot() -> Self {
        Self::from_permutation(2, |i| if i & 1 == 1 { i ^ 2 } else { i })
    }

    /// Controlled-Z on two qubits (symmetric).
    pub fn cz() -> Self {
        Self::diagonal(&[c(1.0), c(1.0), c(1.0), c(-1.0)])
    }

    pub fn swap() -> Self {
        Self::from_permutation(2, |i| ((i & 1) << 1) | ((i >> 1) & 1))
    }

    /// Controlled-SWAP with targets `[control, a, b]`.
    pub fn cswap() -> Self {
        Self::from_permutation(3, |i| {
            if i & 1 == 0 {
                i
            } else {
                let a = (i >> 1) & 1;
                let b = (i >> 2) & 1;
                1 | (b << 1) | (a << 2)
            }
        })
    }

    /// SWAP of two equally sized blocks: targets `[a_0..a_k, b_0..b_k]`.
    pub fn block_swap(block: usize) -> Self {
        let mask = (1usize << block) - 1;
        Self::from_permutation(2 * block, |i| ((i & mask) << block) | (i >> block))
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn dim(&self) -> usize {
        1 << self.arity
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn adjoint(&self) -> Self {
        Gate {
            arity: self.arity,
            matrix: self.matrix.adjoint(),
        }
    }

    /// `self` on the low targets, `high` on the following ones.
    pub fn tensor(&self, high: &Gate) -> Self {
        Gate {
            arity: self.arity + high.arity,
            matrix: high.matrix.kronecker(&self.matrix),
        }
    }

    /// Frobenius norm of `U^dag U - I`.
    pub fn unitarity_error(&self) -> f64 {
        let dim = self.dim();
        (self.matrix.adjoint() * &self.matrix - DMatrix::<C64>::identity(dim, dim)).norm()
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        let dim = self.dim();
        (&self.matrix - DMatrix::<C64>::identity(dim, dim)).norm() <= tol
    }
}

/// Serialized as `{"arity": k, "matrix": [[re, im], ...]}` in row-major order.
#[derive(Serialize, Deserialize)]
struct GateRepr {
    arity: usize,
    matrix: Vec<[f64; 2]>,
}

impl Serialize for Gate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let dim = self.dim();
        let mut entries = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for col in 0..dim {
                let z = self.matrix[(r, col)];
                entries.push([z.re, z.im]);
            }
        }
        GateRepr {
            arity: self.arity,
            matrix: entries,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Gate {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = GateRepr::deserialize(d)?;
        let dim = 1usize << repr.arity;
        if repr.matrix.len() != dim * dim {
            return Err(serde::de::Error::custom(format!(
                "gate of arity {} needs {} entries",
                repr.arity,
                dim * dim
            )));
        }
        let m = DMatrix::from_row_iterator(
            dim,
            dim,
            repr.matrix.iter().map(|[re, im]| C64::new(*re, *im)),
        );
        Gate::from_matrix(repr.arity, m).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_gates_are_unitary() {
        for g in [
            Gate::h(),
            Gate::x(),
            Gate::z(),
            Gate::cnot(),
            Gate::cz(),
            Gate::swap(),
            Gate::cswap(),
            Gate::block_swap(2),
            Gate::ry(0.3),
            Gate::t_c(0.36).unwrap(),
        ] {
            assert!(g.unitarity_error() < 1e-12);
        }
    }

    #[test]
    fn non_unitary_is_rejected() {
        let m = DMatrix::from_element(2, 2, c(1.0));
        assert!(matches!(Gate::from_matrix(1, m), Err(Error::Validation(_))));
    }

    #[test]
    fn t_c_images() {
        let t = Gate::t_c(0.36).unwrap();
        assert!((t.matrix()[(0, 0)] - c(0.6)).norm() < 1e-15);
        assert!((t.matrix()[(1, 0)] - c(-0.8)).norm() < 1e-15);
        assert!((t.matrix()[(0, 1)] - c(0.8)).norm() < 1e-15);
        assert!((t.matrix()[(1, 1)] - c(0.6)).norm() < 1e-15);
        assert!(Gate::t_c(1.5).is_err());
    }

    #[test]
    fn cnot_flips_target_bit_when_control_set() {
        let g = Gate::cnot();
        // local index = control + 2 * target
        assert_eq!(g.matrix()[(3, 1)], c(1.0));
        assert_eq!(g.matrix()[(0, 0)], c(1.0));
        assert_eq!(g.matrix()[(2, 2)], c(1.0));
        assert_eq!(g.matrix()[(1, 1)], c(0.0));
        assert_eq!(g.matrix()[(1, 3)], c(1.0));
    }

    #[test]
    fn serde_roundtrip() {
        let g = Gate::cswap();
        let s = serde_json::to_string(&g).unwrap();
        let back: Gate = serde_json::from_str(&s).unwrap();
        assert_eq!(g, back);
    }
}

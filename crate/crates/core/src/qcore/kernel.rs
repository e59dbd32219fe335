//! Low-level in-place kernels on raw amplitude slices.
//!
//! These operate on unnormalized vectors; the protocol executor relies on that
//! to carry branch weights inside the amplitudes.

use nalgebra::DMatrix;

use super::C64;

/// Local offsets of the `2^k` basis states spanned by `targets`.
pub(crate) fn offsets(targets: &[usize]) -> Vec<usize> {
    let dim = 1usize << targets.len();
    (0..dim)
        .map(|l| {
            targets
                .iter()
                .enumerate()
                .filter(|(j, _)| (l >> j) & 1 == 1)
                .map(|(_, &q)| 1usize << q)
                .sum()
        })
        .collect()
}

fn control_mask(controls: &[(usize, bool)]) -> (usize, usize) {
    let mut mask = 0;
    let mut value = 0;
    for &(q, v) in controls {
        mask |= 1 << q;
        if v {
            value |= 1 << q;
        }
    }
    (mask, value)
}

fn target_mask(targets: &[usize]) -> usize {
    targets.iter().fold(0, |m, &q| m | (1 << q))
}

/// Applies `matrix` to `targets`, only on basis states where every control
/// qubit holds its required value.
pub(crate) fn apply_matrix(
    amps: &mut [C64],
    matrix: &DMatrix<C64>,
    targets: &[usize],
    controls: &[(usize, bool)],
) {
    let tmask = target_mask(targets);
    let (cmask, cval) = control_mask(controls);
    if targets.len() == 1 {
        let t = 1usize << targets[0];
        let (m00, m01, m10, m11) = (
            matrix[(0, 0)],
            matrix[(0, 1)],
            matrix[(1, 0)],
            matrix[(1, 1)],
        );
        for base in 0..amps.len() {
            if base & tmask != 0 || base & cmask != cval {
                continue;
            }
            let a = amps[base];
            let b = amps[base | t];
            amps[base] = m00 * a + m01 * b;
            amps[base | t] = m10 * a + m11 * b;
        }
        return;
    }
    let offs = offsets(targets);
    let dim = offs.len();
    let mut buf = vec![C64::new(0.0, 0.0); dim];
    for base in 0..amps.len() {
        if base & tmask != 0 || base & cmask != cval {
            continue;
        }
        for (l, &o) in offs.iter().enumerate() {
            buf[l] = amps[base + o];
        }
        for (r, &o) in offs.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (l, b) in buf.iter().enumerate() {
                let m = matrix[(r, l)];
                if m.re != 0.0 || m.im != 0.0 {
                    acc += m * b;
                }
            }
            amps[base + o] = acc;
        }
    }
}

/// Applies `phase * (I - 2 |w><w|)` on `qubits` (w must be unit norm).
pub(crate) fn apply_reflection(
    amps: &mut [C64],
    w: &[C64],
    phase: C64,
    qubits: &[usize],
    controls: &[(usize, bool)],
) {
    let tmask = target_mask(qubits);
    let (cmask, cval) = control_mask(controls);
    let offs = offsets(qubits);
    for base in 0..amps.len() {
        if base & tmask != 0 || base & cmask != cval {
            continue;
        }
        let mut overlap = C64::new(0.0, 0.0);
        for (l, &o) in offs.iter().enumerate() {
            overlap += w[l].conj() * amps[base + o];
        }
        let k = overlap * 2.0;
        for (l, &o) in offs.iter().enumerate() {
            amps[base + o] = phase * (amps[base + o] - w[l] * k);
        }
    }
}

/// Zeroes every amplitude whose `qubit` bit differs from `value`.
pub(crate) fn project_bit(amps: &mut [C64], qubit: usize, value: bool) {
    let bit = 1usize << qubit;
    for (i, a) in amps.iter_mut().enumerate() {
        if ((i & bit) != 0) != value {
            *a = C64::new(0.0, 0.0);
        }
    }
}

/// Zeroes every amplitude whose parity over `qubits` differs from `value`.
pub(crate) fn project_parity(amps: &mut [C64], qubits: &[usize], value: bool) {
    let mask = target_mask(qubits);
    for (i, a) in amps.iter_mut().enumerate() {
        if ((i & mask).count_ones() % 2 == 1) != value {
            *a = C64::new(0.0, 0.0);
        }
    }
}

pub(crate) fn norm_sqr(amps: &[C64]) -> f64 {
    amps.iter().map(|a| a.norm_sqr()).sum()
}

/// `<a|b>`.
pub(crate) fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `M[i, j] = sum_r a[i, r] conj(b[j, r])`, where `i, j` index the `keep`
/// qubits (bit `j` of the local index is `keep[j]`) and `r` the rest.
pub(crate) fn partial_outer(a: &[C64], b: &[C64], keep: &[usize]) -> DMatrix<C64> {
    let kmask = target_mask(keep);
    let offs = offsets(keep);
    let dim = offs.len();
    let mut m = DMatrix::zeros(dim, dim);
    for base in 0..a.len() {
        if base & kmask != 0 {
            continue;
        }
        for (i, &oi) in offs.iter().enumerate() {
            let ai = a[base + oi];
            if ai.re == 0.0 && ai.im == 0.0 {
                continue;
            }
            for (j, &oj) in offs.iter().enumerate() {
                m[(i, j)] += ai * b[base + oj].conj();
            }
        }
    }
    m
}

/// Extracts the bits of `qubits` from a global basis index, `qubits[0]` first.
pub(crate) fn gather_bits(index: usize, qubits: &[usize]) -> usize {
    qubits
        .iter()
        .enumerate()
        .fold(0, |acc, (j, &q)| acc | (((index >> q) & 1) << j))
}

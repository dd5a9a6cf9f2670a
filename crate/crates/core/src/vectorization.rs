//! Vectorization of density matrices.
//!
//! A single qubit's `|i⟩⟨j|` maps to flat index `2i + j`, so the trace
//! functional on one site is `(1, 0, 0, 1)`. For `n` qubits the per-site
//! pairs are concatenated with site 1 most significant.

use crate::tensor::{DenseTensor, C64, ONE, ZERO};

/// Per-site trace functional.
pub const TRACE_VECTOR: [C64; 4] = [ONE, ZERO, ZERO, ONE];

/// Vectorized `|0⟩⟨0|`.
pub const VACUUM_VECTOR: [C64; 4] = [ONE, ZERO, ZERO, ZERO];

/// Flat vectorized index of the matrix element `(row, col)` of an `n`-qubit
/// operator.
pub fn vec_index(row: usize, col: usize, n: usize) -> usize {
    let mut out = 0;
    for q in 0..n {
        let shift = n - 1 - q;
        let i = (row >> shift) & 1;
        let j = (col >> shift) & 1;
        out = out * 4 + 2 * i + j;
    }
    out
}

/// Inverse of [`vec_index`].
pub fn matrix_index(v: usize, n: usize) -> (usize, usize) {
    let (mut row, mut col) = (0, 0);
    for q in 0..n {
        let pair = (v >> (2 * (n - 1 - q))) & 3;
        row = (row << 1) | (pair >> 1);
        col = (col << 1) | (pair & 1);
    }
    (row, col)
}

pub fn vectorize(rho: &DenseTensor, n: usize) -> Vec<C64> {
    let d = 1usize << n;
    assert_eq!(rho.shape(), &[d, d]);
    let mut out = vec![ZERO; d * d];
    for r in 0..d {
        for c in 0..d {
            out[vec_index(r, c, n)] = rho.at(r, c);
        }
    }
    out
}

pub fn unvectorize(v: &[C64], n: usize) -> DenseTensor {
    let d = 1usize << n;
    assert_eq!(v.len(), d * d);
    let mut data = vec![ZERO; d * d];
    for (k, x) in v.iter().enumerate() {
        let (r, c) = matrix_index(k, n);
        data[r * d + c] = *x;
    }
    DenseTensor::new(vec![d, d], data).expect("square matrix")
}

/// Superoperator `ρ ↦ U ρ U†` of an operator on `n` qubits, in vectorized
/// order: `S[vec(i,j), vec(k,l)] = U[i,k] · conj(U[j,l])`.
pub fn superoperator(u: &DenseTensor, n: usize) -> DenseTensor {
    let d = 1usize << n;
    assert_eq!(u.shape(), &[d, d]);
    let dd = d * d;
    let mut s = DenseTensor::zeros(&[dd, dd]);
    let data = s.data_mut();
    for i in 0..d {
        for j in 0..d {
            let row = vec_index(i, j, n);
            for k in 0..d {
                let uik = u.at(i, k);
                if uik == ZERO {
                    continue;
                }
                for l in 0..d {
                    data[row * dd + vec_index(k, l, n)] = uik * u.at(j, l).conj();
                }
            }
        }
    }
    s
}

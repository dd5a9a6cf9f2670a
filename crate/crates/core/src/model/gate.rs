//! Local gates of the layered network.
//!
//! A bulk gate acts on three qubits ordered `(k−1, ℓ−1), (k, ℓ−1), (k, ℓ)`:
//! it evolves the two old-layer qubits under the local Hamiltonian for a
//! time `dt`, couples them to the fresh layer-`ℓ` qubit through the jump
//! operator for a time `√dt`, and finally swaps `(k, ℓ−1)` with `(k, ℓ)`.

use super::params::ParamSet;
use super::pauli::{sigma_minus, sigma_plus, swap, Pauli};
use crate::tensor::{matrix_exp, DenseTensor, C64, I, ZERO};
use crate::vectorization::superoperator;

/// `Σ_{α1,α2} c[α1][α2] σ^{α1} ⊗ σ^{α2}` on two qubits.
pub fn two_site_operator(coeffs: &[[C64; 4]; 4]) -> DenseTensor {
    let mut out = DenseTensor::zeros(&[4, 4]);
    for a1 in Pauli::ALL {
        for a2 in Pauli::ALL {
            let c = coeffs[a1.index()][a2.index()];
            if c != ZERO {
                out.add_assign_scaled(&a1.matrix().kron(&a2.matrix()), c);
            }
        }
    }
    out
}

/// `Σ_α c[α] σ^α` on one qubit.
pub fn single_site_operator(coeffs: &[C64; 4]) -> DenseTensor {
    let mut out = DenseTensor::zeros(&[2, 2]);
    for a in Pauli::ALL {
        out.add_assign_scaled(&a.matrix(), coeffs[a.index()]);
    }
    out
}

pub fn complexify(h: &[[f64; 4]; 4]) -> [[C64; 4]; 4] {
    h.map(|row| row.map(|x| C64::new(x, 0.0)))
}

/// Local Hamiltonian and jump operator acting on `(k−1, k)`.
pub fn bulk_operators(params: &ParamSet) -> (DenseTensor, DenseTensor) {
    (two_site_operator(&complexify(&params.h)), two_site_operator(&params.j))
}

/// Single-site Hamiltonian and jump operator at the open chain end.
pub fn boundary_operators(params: &ParamSet) -> (DenseTensor, DenseTensor) {
    let h = complexify(&params.h);
    (single_site_operator(&h[0]), single_site_operator(&params.j[0]))
}

/// A unitary on two (chain end) or three (bulk) qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalGate {
    matrix: DenseTensor,
}

impl LocalGate {
    pub fn matrix(&self) -> &DenseTensor {
        &self.matrix
    }

    pub fn num_qubits(&self) -> usize {
        self.matrix.rows().trailing_zeros() as usize
    }

    /// `ρ ↦ G ρ G†` in vectorized form.
    pub fn superoperator(&self) -> DenseTensor {
        superoperator(&self.matrix, self.num_qubits())
    }
}

/// `SWAP · exp(−i√dt (J ⊗ σ⁻ + J† ⊗ σ⁺)) · exp(−i dt H ⊗ 1)` where `H`, `J`
/// act on the old-layer qubits and the last qubit is the fresh one.
///
/// The coupling excites the vacuum ancilla whenever `J` acts on the system,
/// so that tracing the ancilla out produces the dissipator of `J`.
fn collision_unitary(h: &DenseTensor, j: &DenseTensor, dt: f64) -> DenseTensor {
    let d = h.rows();
    let id2 = DenseTensor::identity(2);
    let h_full = h.kron(&id2);
    let coupling = j
        .kron(&sigma_minus())
        .add(&j.adjoint().kron(&sigma_plus()))
        .expect("conformant");
    let free = matrix_exp(&h_full, -I * dt).expect("finite Hamiltonian");
    let kick = matrix_exp(&coupling, -I * dt.sqrt()).expect("finite coupling");
    let swap_last = DenseTensor::identity(d / 2).kron(&swap());
    swap_last
        .matmul(&kick)
        .and_then(|m| m.matmul(&free))
        .expect("conformant")
}

/// Bulk gate on qubits `(k−1, ℓ−1), (k, ℓ−1), (k, ℓ)`.
pub fn build_gate(params: &ParamSet, dt: f64) -> LocalGate {
    assert!(dt >= 0.0, "time step must be non-negative");
    let (h, j) = bulk_operators(params);
    LocalGate {
        matrix: collision_unitary(&h, &j, dt),
    }
}

/// Gate for the first site of the open chain, acting on `(1, ℓ−1), (1, ℓ)`.
///
/// Equal to [`build_gate`] on the boundary-restricted parameters with the
/// identity-acting neighbour slot removed.
pub fn boundary_gate(params: &ParamSet, dt: f64) -> LocalGate {
    assert!(dt >= 0.0, "time step must be non-negative");
    let (h, j) = boundary_operators(params);
    LocalGate {
        matrix: collision_unitary(&h, &j, dt),
    }
}

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::tensor::{DenseTensor, C64, I, ONE, ZERO};

/// Pauli label, ordered `I, x, y, z` for matrix indexing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    #[serde(rename = "I")]
    I,
    #[serde(rename = "x")]
    X,
    #[serde(rename = "y")]
    Y,
    #[serde(rename = "z")]
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// The 2×2 matrix, with `σ^z = diag(1, -1)` so `|0⟩` is the `+1` eigenstate.
    pub fn elements(self) -> [[C64; 2]; 2] {
        match self {
            Pauli::I => [[ONE, ZERO], [ZERO, ONE]],
            Pauli::X => [[ZERO, ONE], [ONE, ZERO]],
            Pauli::Y => [[ZERO, -I], [I, ZERO]],
            Pauli::Z => [[ONE, ZERO], [ZERO, -ONE]],
        }
    }

    pub fn matrix(self) -> DenseTensor {
        DenseTensor::from_rows(self.elements())
    }

    /// Linear functional `ρ ↦ Tr(σ ρ)` on the vectorized single-qubit `ρ`.
    pub fn trace_functional(self) -> [C64; 4] {
        let m = self.elements();
        // Tr(σ ρ) = Σ_ij σ[j][i] ρ[i][j], and ρ[i][j] sits at 2i + j
        [m[0][0], m[1][0], m[0][1], m[1][1]]
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pauli::I => "I",
            Pauli::X => "x",
            Pauli::Y => "y",
            Pauli::Z => "z",
        })
    }
}

/// `σ⁺ = (σ^x + iσ^y)/2 = |0⟩⟨1|`.
pub fn sigma_plus() -> DenseTensor {
    DenseTensor::from_rows([[ZERO, ONE], [ZERO, ZERO]])
}

/// `σ⁻ = (σ^x − iσ^y)/2 = |1⟩⟨0|`, which excites the vacuum.
pub fn sigma_minus() -> DenseTensor {
    DenseTensor::from_rows([[ZERO, ZERO], [ONE, ZERO]])
}

pub fn swap() -> DenseTensor {
    DenseTensor::from_fn_2d(4, 4, |r, c| {
        let swapped = ((c & 1) << 1) | (c >> 1);
        if r == swapped {
            ONE
        } else {
            ZERO
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_plus_from_paulis() {
        let sp = Pauli::X
            .matrix()
            .add(&Pauli::Y.matrix().scale(I))
            .unwrap()
            .scale(C64::new(0.5, 0.0));
        assert_eq!(sp, sigma_plus());
        assert_eq!(sigma_plus().at(0, 1), ONE);
        assert_eq!(sigma_minus(), sigma_plus().adjoint());
    }

    #[test]
    fn vacuum_is_plus_one_of_z() {
        assert_eq!(Pauli::Z.matrix().at(0, 0), ONE);
        assert_eq!(Pauli::Z.matrix().at(1, 1), -ONE);
    }

    #[test]
    fn trace_functionals() {
        // ρ = |+⟩⟨+| has ⟨σx⟩ = 1
        let plus = [C64::new(0.5, 0.0); 4];
        let ex: C64 = Pauli::X.trace_functional().iter().zip(&plus).map(|(a, b)| a * b).sum();
        assert!((ex - ONE).norm() < 1e-15);
        let tr: C64 = Pauli::I.trace_functional().iter().zip(&plus).map(|(a, b)| a * b).sum();
        assert!((tr - ONE).norm() < 1e-15);
        // ρ = (I + σy)/2 has ⟨σy⟩ = 1: entries (1/2, -i/2, i/2, 1/2)
        let y_state = [C64::new(0.5, 0.0), C64::new(0.0, -0.5), C64::new(0.0, 0.5), C64::new(0.5, 0.0)];
        let ey: C64 = Pauli::Y.trace_functional().iter().zip(&y_state).map(|(a, b)| a * b).sum();
        assert!((ey - ONE).norm() < 1e-15);
    }

    #[test]
    fn swap_exchanges_qubits() {
        let s = swap();
        // |01⟩ (index 1) ↔ |10⟩ (index 2)
        assert_eq!(s.at(2, 1), ONE);
        assert_eq!(s.at(1, 2), ONE);
        assert_eq!(s.at(0, 0), ONE);
        assert_eq!(s.at(3, 3), ONE);
    }
}

//! Gate parameters: the real coefficient matrix `h` of the local
//! Hamiltonians, the complex matrix `j` of the jump operators, and the mask
//! of trainable entries.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::pauli::Pauli;
use crate::error::{Error, Result};
use crate::tensor::{C64, ZERO};

pub const PARAMS_SCHEMA: &str = "qnn.params/1";

/// Which coefficient matrix a slot lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coeff {
    H,
    J,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Re,
    Im,
}

/// One trainable real degree of freedom.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Slot {
    pub matrix: Coeff,
    pub a1: Pauli,
    pub a2: Pauli,
    pub part: Part,
}

impl Slot {
    pub const fn h(a1: Pauli, a2: Pauli) -> Self {
        Self {
            matrix: Coeff::H,
            a1,
            a2,
            part: Part::Re,
        }
    }

    pub const fn j_re(a1: Pauli, a2: Pauli) -> Self {
        Self {
            matrix: Coeff::J,
            a1,
            a2,
            part: Part::Re,
        }
    }

    pub const fn j_im(a1: Pauli, a2: Pauli) -> Self {
        Self {
            matrix: Coeff::J,
            a1,
            a2,
            part: Part::Im,
        }
    }
}

use Pauli::{I as PI, X as PX, Y as PY, Z as PZ};

/// Trainable entries for dataset I, in the order of the 10-component vector `a`.
pub const DATASET_I_MASK: [Slot; 10] = [
    Slot::h(PI, PX),
    Slot::h(PI, PZ),
    Slot::h(PX, PX),
    Slot::h(PY, PY),
    Slot::h(PZ, PZ),
    Slot::j_re(PI, PX),
    Slot::j_re(PI, PY),
    Slot::j_im(PI, PY),
    Slot::j_re(PI, PZ),
    Slot::j_im(PI, PZ),
];

pub const A_INITIAL: [f64; 10] = [1.0, -1.0, 1.0, 1.0, -1.0, 1.0, -1.0, -1.0, 1.0, -1.0];

/// Reported endpoint of the dataset-I run; a reference configuration only.
pub const A_TRAINED: [f64; 10] = [0.32, 0.9, -0.38, -0.26, -1.08, 0.27, -0.43, -0.17, 0.38, -0.64];

/// Trainable entries for dataset II, in the order of the 11-component vector `b`.
pub const DATASET_II_MASK: [Slot; 11] = [
    Slot::h(PI, PX),
    Slot::h(PX, PX),
    Slot::h(PY, PY),
    Slot::h(PZ, PZ),
    Slot::j_re(PI, PX),
    Slot::j_re(PI, PZ),
    Slot::j_re(PX, PX),
    Slot::j_re(PX, PY),
    Slot::j_re(PX, PZ),
    Slot::j_re(PY, PX),
    Slot::j_re(PZ, PX),
];

pub const B_INITIAL: [f64; 11] = [0.0, -1.0, -1.0, -1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0];

/// Reported endpoint of the dataset-II run; a reference configuration only.
pub const B_TRAINED: [f64; 11] = [-0.05, -1.06, -0.55, -1.33, 0.01, -0.40, -0.07, -0.55, -0.04, 0.26, -0.03];

/// Coefficients `h` (real) and `j` (complex) plus the trainable mask.
///
/// The flat view lists the masked entries in mask order.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSet {
    pub h: [[f64; 4]; 4],
    pub j: [[C64; 4]; 4],
    mask: Vec<Slot>,
}

impl ParamSet {
    pub fn zeros() -> Self {
        Self {
            h: [[0.0; 4]; 4],
            j: [[ZERO; 4]; 4],
            mask: Vec::new(),
        }
    }

    /// All-zero coefficients with the given trainable mask.
    pub fn with_mask(mask: Vec<Slot>) -> Result<Self> {
        let mut p = Self::zeros();
        p.set_mask(mask)?;
        Ok(p)
    }

    pub fn dataset_i(a: &[f64]) -> Result<Self> {
        let mut p = Self::with_mask(DATASET_I_MASK.to_vec())?;
        p.set_flat(a)?;
        Ok(p)
    }

    pub fn dataset_ii(b: &[f64]) -> Result<Self> {
        let mut p = Self::with_mask(DATASET_II_MASK.to_vec())?;
        p.set_flat(b)?;
        Ok(p)
    }

    /// Every coefficient (including imaginary parts of `j`) uniform in
    /// `[-1, 1]`; the mask is left empty.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut p = Self::zeros();
        for a in 0..4 {
            for b in 0..4 {
                p.h[a][b] = rng.random_range(-1.0..=1.0);
            }
        }
        for a in 0..4 {
            for b in 0..4 {
                p.j[a][b] = C64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0));
            }
        }
        p
    }

    /// Trainable entries of `mask` uniform in `[-1, 1]`, all others zero.
    pub fn random_masked<R: Rng + ?Sized>(rng: &mut R, mask: &[Slot]) -> Result<Self> {
        let mut p = Self::with_mask(mask.to_vec())?;
        let values: Vec<f64> = (0..mask.len()).map(|_| rng.random_range(-1.0..=1.0)).collect();
        p.set_flat(&values)?;
        Ok(p)
    }

    pub fn mask(&self) -> &[Slot] {
        &self.mask
    }

    pub fn set_mask(&mut self, mask: Vec<Slot>) -> Result<()> {
        for (i, s) in mask.iter().enumerate() {
            if s.matrix == Coeff::H && s.part == Part::Im {
                return Err(Error::InvalidArgument(format!(
                    "mask slot {i}: h is real and has no imaginary part"
                )));
            }
            if mask[..i].contains(s) {
                return Err(Error::InvalidArgument(format!("mask slot {i} is duplicated")));
            }
        }
        self.mask = mask;
        Ok(())
    }

    pub fn num_trainable(&self) -> usize {
        self.mask.len()
    }

    pub fn get(&self, slot: Slot) -> f64 {
        let (a, b) = (slot.a1.index(), slot.a2.index());
        match (slot.matrix, slot.part) {
            (Coeff::H, _) => self.h[a][b],
            (Coeff::J, Part::Re) => self.j[a][b].re,
            (Coeff::J, Part::Im) => self.j[a][b].im,
        }
    }

    pub fn set(&mut self, slot: Slot, value: f64) {
        let (a, b) = (slot.a1.index(), slot.a2.index());
        match (slot.matrix, slot.part) {
            (Coeff::H, _) => self.h[a][b] = value,
            (Coeff::J, Part::Re) => self.j[a][b].re = value,
            (Coeff::J, Part::Im) => self.j[a][b].im = value,
        }
    }

    pub fn flat(&self) -> Vec<f64> {
        self.mask.iter().map(|&s| self.get(s)).collect()
    }

    pub fn set_flat(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.mask.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} parameter values, got {}",
                self.mask.len(),
                values.len()
            )));
        }
        for (&s, &v) in self.mask.clone().iter().zip(values) {
            self.set(s, v);
        }
        Ok(())
    }

    /// Copy with masked slot `index` shifted by `eps`.
    pub fn perturbed(&self, index: usize, eps: f64) -> Self {
        let mut p = self.clone();
        let slot = self.mask[index];
        p.set(slot, self.get(slot) + eps);
        p
    }

    /// Subtract `step` from the masked entries; nothing else moves.
    pub fn apply_update(&mut self, step: &[f64]) -> Result<()> {
        let current = self.flat();
        if step.len() != current.len() {
            return Err(Error::InvalidArgument(format!(
                "update has {} components for {} trainable slots",
                step.len(),
                current.len()
            )));
        }
        let next: Vec<f64> = current.iter().zip(step).map(|(x, s)| x - s).collect();
        self.set_flat(&next)
    }

    /// Copy with every `α1 ≠ I` coefficient zeroed: the chain-end variant
    /// whose missing left neighbour acts as the identity.
    pub fn boundary_restricted(&self) -> Self {
        let mut p = self.clone();
        for a in 1..4 {
            p.h[a] = [0.0; 4];
            p.j[a] = [ZERO; 4];
        }
        p
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ParamSetFile::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: ParamSetFile = serde_json::from_str(s)?;
        file.try_into()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// On-disk layout of a [`ParamSet`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ParamSetFile {
    #[serde(default = "params_schema")]
    pub schema: String,
    pub h: [[f64; 4]; 4],
    pub j_re: [[f64; 4]; 4],
    pub j_im: [[f64; 4]; 4],
    pub mask: Vec<Slot>,
}

fn params_schema() -> String {
    PARAMS_SCHEMA.to_string()
}

impl From<&ParamSet> for ParamSetFile {
    fn from(p: &ParamSet) -> Self {
        let mut j_re = [[0.0; 4]; 4];
        let mut j_im = [[0.0; 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                j_re[a][b] = p.j[a][b].re;
                j_im[a][b] = p.j[a][b].im;
            }
        }
        Self {
            schema: params_schema(),
            h: p.h,
            j_re,
            j_im,
            mask: p.mask.clone(),
        }
    }
}

impl TryFrom<ParamSetFile> for ParamSet {
    type Error = Error;

    fn try_from(f: ParamSetFile) -> Result<Self> {
        let mut p = ParamSet::zeros();
        p.h = f.h;
        for a in 0..4 {
            for b in 0..4 {
                p.j[a][b] = C64::new(f.j_re[a][b], f.j_im[a][b]);
            }
        }
        p.set_mask(f.mask)?;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dataset_i_layout() {
        let p = ParamSet::dataset_i(&A_INITIAL).unwrap();
        assert_eq!(p.num_trainable(), 10);
        assert_eq!(p.h[0][1], 1.0); // h_Ix
        assert_eq!(p.h[0][3], -1.0); // h_Iz
        assert_eq!(p.h[1][1], 1.0);
        assert_eq!(p.h[2][2], 1.0);
        assert_eq!(p.h[3][3], -1.0);
        assert_eq!(p.j[0][1], C64::new(1.0, 0.0));
        assert_eq!(p.j[0][2], C64::new(-1.0, -1.0));
        assert_eq!(p.j[0][3], C64::new(1.0, -1.0));
        assert_eq!(p.flat(), A_INITIAL.to_vec());
    }

    #[test]
    fn dataset_ii_layout() {
        let p = ParamSet::dataset_ii(&B_TRAINED).unwrap();
        assert_eq!(p.num_trainable(), 11);
        assert_eq!(p.h[0][1], -0.05);
        assert_eq!(p.j[3][1], C64::new(-0.03, 0.0));
        assert_eq!(p.j[1][2], C64::new(-0.55, 0.0));
    }

    #[test]
    fn update_leaves_unmasked_entries() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut p = ParamSet::random(&mut rng);
        p.set_mask(DATASET_I_MASK.to_vec()).unwrap();
        let before = p.clone();
        p.apply_update(&[0.5; 10]).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                let hs = Slot::h(Pauli::ALL[a], Pauli::ALL[b]);
                if !DATASET_I_MASK.contains(&hs) {
                    assert_eq!(p.h[a][b], before.h[a][b]);
                }
                for s in [Slot::j_re(Pauli::ALL[a], Pauli::ALL[b]), Slot::j_im(Pauli::ALL[a], Pauli::ALL[b])] {
                    if !DATASET_I_MASK.contains(&s) {
                        assert_eq!(p.get(s), before.get(s));
                    }
                }
            }
        }
        for (x, y) in p.flat().iter().zip(before.flat()) {
            assert_eq!(*x, y - 0.5);
        }
    }

    #[test]
    fn rejects_imaginary_h_and_duplicates() {
        let bad = Slot {
            matrix: Coeff::H,
            a1: Pauli::X,
            a2: Pauli::X,
            part: Part::Im,
        };
        assert!(ParamSet::with_mask(vec![bad]).is_err());
        assert!(ParamSet::with_mask(vec![Slot::h(Pauli::X, Pauli::X); 2]).is_err());
        assert!(ParamSet::dataset_i(&[0.0; 9]).is_err());
    }

    #[test]
    fn json_layout_and_exact_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut p = ParamSet::random(&mut rng);
        p.set_mask(DATASET_II_MASK.to_vec()).unwrap();
        let s = p.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["mask"][0], serde_json::json!({"matrix": "h", "a1": "I", "a2": "x", "part": "re"}));
        assert!(v["j_im"].is_array());
        assert_eq!(ParamSet::from_json(&s).unwrap(), p);
    }

    #[test]
    fn boundary_restriction_keeps_identity_row() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = ParamSet::random(&mut rng);
        let b = p.boundary_restricted();
        assert_eq!(b.h[0], p.h[0]);
        assert_eq!(b.j[0], p.j[0]);
        assert!(b.h[1..].iter().flatten().all(|&x| x == 0.0));
    }

    proptest::proptest! {
        #[test]
        fn flat_view_roundtrip(values in proptest::collection::vec(-10.0f64..10.0, 11)) {
            let mut p = ParamSet::with_mask(DATASET_II_MASK.to_vec()).unwrap();
            p.set_flat(&values).unwrap();
            proptest::prop_assert_eq!(p.flat(), values);
        }
    }
}

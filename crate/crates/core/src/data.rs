//! Labeled Bloch-sphere datasets of pure product states.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::DenseLayerState;
use crate::rng::{StreamKey, DOMAIN_DATA, DOMAIN_SPLIT};
use crate::tn::{product_state_mps, LayerMps};

pub const SPLIT_SCHEMA: &str = "qnn.split/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    A,
    B,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::A => "A",
            Label::B => "B",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DatasetTag {
    I,
    II,
}

impl fmt::Display for DatasetTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DatasetTag::I => "I",
            DatasetTag::II => "II",
        })
    }
}

impl FromStr for DatasetTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "I" | "i" | "1" => Ok(DatasetTag::I),
            "II" | "ii" | "2" => Ok(DatasetTag::II),
            other => Err(Error::InvalidArgument(format!("unknown dataset {other:?} (expected I or II)"))),
        }
    }
}

/// A labeled pure state given by its polar and azimuthal angles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochSample {
    pub label: Label,
    pub theta: f64,
    pub phi: f64,
}

impl BlochSample {
    /// `φ` is wrapped to `[0, 2π)`.
    pub fn new(label: Label, theta: f64, phi: f64) -> Self {
        Self {
            label,
            theta,
            phi: wrap_angle(phi),
        }
    }

    /// Recovers the angles from a Bloch vector of length 1/2.
    pub fn from_bloch(label: Label, bloch: [f64; 3]) -> Result<Self> {
        let [mx, my, mz] = bloch;
        let r = (mx * mx + my * my + mz * mz).sqrt();
        if (r - 0.5).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!("Bloch vector length {r} is not 1/2")));
        }
        let theta = (2.0 * mz).clamp(-1.0, 1.0).acos();
        let phi = if mx == 0.0 && my == 0.0 { 0.0 } else { arctan2(my, mx)? };
        Ok(Self::new(label, theta, phi))
    }

    pub fn mz(&self) -> f64 {
        self.theta.cos() / 2.0
    }

    /// `(m^x, m^y, m^z)` with `m^z = cos θ / 2` and `m^x + i m^y = R e^{iφ}`,
    /// `R = √(1/4 − (m^z)²)`.
    pub fn bloch(&self) -> [f64; 3] {
        let mz = self.mz();
        let r = (0.25 - mz * mz).max(0.0).sqrt();
        [r * self.phi.cos(), r * self.phi.sin(), mz]
    }

    pub fn to_input_state(&self, sites: usize) -> Result<LayerMps> {
        product_state_mps(self.bloch(), sites)
    }

    pub fn to_dense_state(&self, sites: usize) -> Result<DenseLayerState> {
        DenseLayerState::product_state(self.bloch(), sites)
    }
}

fn wrap_angle(phi: f64) -> f64 {
    let w = phi.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Quadrant-aware inverse tangent of `y / x`, with values in `(−π, π]`.
pub fn arctan2(y: f64, x: f64) -> Result<f64> {
    if x > 0.0 {
        Ok((y / x).atan())
    } else if x < 0.0 {
        if y > 0.0 {
            Ok((y / x).atan() + PI)
        } else if y < 0.0 {
            Ok((y / x).atan() - PI)
        } else {
            Ok(PI)
        }
    } else if y > 0.0 {
        Ok(FRAC_PI_2)
    } else if y < 0.0 {
        Ok(-FRAC_PI_2)
    } else {
        Err(Error::InvalidArgument("arctan2 is undefined at the origin".into()))
    }
}

fn random_label<R: Rng + ?Sized>(rng: &mut R) -> Label {
    if rng.random_bool(0.5) {
        Label::A
    } else {
        Label::B
    }
}

/// Class A has `m^z ∈ [0.15, 0.4]`, class B `m^z ∈ [−0.4, −0.15]`; the
/// azimuth is uniform.
pub fn sample_dataset_i<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Result<Vec<BlochSample>> {
    check_count(count)?;
    Ok((0..count)
        .map(|_| {
            let label = random_label(rng);
            let mz: f64 = match label {
                Label::A => rng.random_range(0.15..=0.4),
                Label::B => rng.random_range(-0.4..=-0.15),
            };
            let phi = rng.random_range(0.0..TAU);
            BlochSample::new(label, (2.0 * mz).acos(), phi)
        })
        .collect())
}

pub const DATASET_II_THETAS: [f64; 2] = [FRAC_PI_4, 3.0 * FRAC_PI_4];
pub const INTERVAL_1: (f64, f64) = (FRAC_PI_4, 3.0 * FRAC_PI_4);
pub const INTERVAL_2: (f64, f64) = (5.0 * FRAC_PI_4, 7.0 * FRAC_PI_4);

/// `θ ∈ {π/4, 3π/4}` with equal probability. Class A takes `φ ∈ I₁` at
/// `θ = π/4` and `φ ∈ I₂` at `θ = 3π/4`; class B the other way round.
pub fn sample_dataset_ii<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Result<Vec<BlochSample>> {
    check_count(count)?;
    Ok((0..count)
        .map(|_| {
            let label = random_label(rng);
            let upper = rng.random_bool(0.5);
            let theta = if upper { DATASET_II_THETAS[0] } else { DATASET_II_THETAS[1] };
            let first_interval = upper == (label == Label::A);
            let (lo, hi) = if first_interval { INTERVAL_1 } else { INTERVAL_2 };
            BlochSample::new(label, theta, rng.random_range(lo..=hi))
        })
        .collect())
}

/// Indices of the dataset-II generation rules a sample satisfies, in the
/// order (A, π/4, I₁), (A, 3π/4, I₂), (B, 3π/4, I₁), (B, π/4, I₂).
pub fn dataset_ii_rules(s: &BlochSample) -> Vec<usize> {
    let within = |(lo, hi): (f64, f64)| s.phi >= lo && s.phi <= hi;
    let rules = [
        (Label::A, DATASET_II_THETAS[0], INTERVAL_1),
        (Label::A, DATASET_II_THETAS[1], INTERVAL_2),
        (Label::B, DATASET_II_THETAS[1], INTERVAL_1),
        (Label::B, DATASET_II_THETAS[0], INTERVAL_2),
    ];
    rules
        .iter()
        .enumerate()
        .filter(|(_, (l, t, iv))| s.label == *l && s.theta == *t && within(*iv))
        .map(|(i, _)| i)
        .collect()
}

fn check_count(count: usize) -> Result<()> {
    if count < 2 {
        return Err(Error::InvalidArgument(format!("a dataset needs at least 2 samples, got {count}")));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub dataset: DatasetTag,
    pub seed: u64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub tag: DatasetTag,
    pub seed: u64,
    pub samples: Vec<BlochSample>,
}

impl Dataset {
    pub fn generate(tag: DatasetTag, count: usize, seed: u64) -> Result<Self> {
        let mut rng = StreamKey::root(seed).child(DOMAIN_DATA).rng();
        let samples = match tag {
            DatasetTag::I => sample_dataset_i(count, &mut rng)?,
            DatasetTag::II => sample_dataset_ii(count, &mut rng)?,
        };
        Ok(Self { tag, seed, samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = serde_json::to_string(&DatasetHeader {
            dataset: self.tag,
            seed: self.seed,
            count: self.samples.len(),
        })?;
        out.push('\n');
        for s in &self.samples {
            out.push_str(&serde_json::to_string(s)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(self.to_jsonl()?.as_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let reader = BufReader::new(fs::File::open(path)?);
        let mut lines = reader.lines();
        let header_line = lines
            .next()
            .ok_or_else(|| Error::InvalidArgument(format!("{}: empty dataset file", path.display())))??;
        let header: DatasetHeader = serde_json::from_str(&header_line)?;
        let mut samples = Vec::with_capacity(header.count);
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let s: BlochSample = serde_json::from_str(&line)
                .map_err(|e| Error::InvalidArgument(format!("{}: sample {}: {e}", path.display(), i + 1)))?;
            samples.push(s);
        }
        if samples.len() != header.count {
            return Err(Error::InvalidArgument(format!(
                "{}: header announces {} samples, found {}",
                path.display(),
                header.count,
                samples.len()
            )));
        }
        if samples.is_empty() {
            return Err(Error::InvalidArgument(format!("{}: dataset has no samples", path.display())));
        }
        Ok(Self {
            tag: header.dataset,
            seed: header.seed,
            samples,
        })
    }
}

/// Disjoint training and validation index sets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub schema: String,
    pub seed: u64,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

impl Split {
    /// Random partition of the first `train + validation` positions of a
    /// shuffled index list.
    pub fn new(count: usize, train: usize, validation: usize, seed: u64) -> Result<Self> {
        if train == 0 || validation == 0 || train + validation > count {
            return Err(Error::InvalidArgument(format!(
                "cannot split {count} samples into {train} training and {validation} validation"
            )));
        }
        let mut idx: Vec<usize> = (0..count).collect();
        idx.shuffle(&mut StreamKey::root(seed).child(DOMAIN_SPLIT).rng());
        let mut t = idx[..train].to_vec();
        let mut v = idx[train..train + validation].to_vec();
        t.sort_unstable();
        v.sort_unstable();
        Ok(Self {
            schema: SPLIT_SCHEMA.into(),
            seed,
            train: t,
            validation: v,
        })
    }

    /// Training split of `count` minus `count / 6` validation samples
    /// (250/50 for 300).
    pub fn default_for(count: usize, seed: u64) -> Result<Self> {
        let validation = (count / 6).max(1);
        Self::new(count, count - validation, validation, seed)
    }

    pub fn validate(&self, count: usize) -> Result<()> {
        let mut seen = vec![false; count];
        for &i in self.train.iter().chain(&self.validation) {
            if i >= count || std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidArgument(format!("split index {i} is out of range or repeated")));
            }
        }
        if self.train.is_empty() || self.validation.is_empty() {
            return Err(Error::InvalidArgument("split has an empty part".into()));
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

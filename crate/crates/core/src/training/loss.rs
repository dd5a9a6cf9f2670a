use serde::{Deserialize, Serialize};

use crate::data::Label;
use crate::error::{Error, Result};

/// Margin of the contrastive loss.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub margin: f64,
}

impl LossConfig {
    pub fn new(margin: f64) -> Result<Self> {
        let c = Self { margin };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.margin) {
            return Err(Error::InvalidArgument(format!("loss margin must lie in [0, 1], got {}", self.margin)));
        }
        Ok(())
    }
}

/// `(1/P²) Σ_{i,l} [y_il (m_i − m_l)² + (1 − y_il) max(0, d − |m_i − m_l|)²]`
/// over ordered pairs, with `y_il = 1` iff the labels agree.
pub fn contrastive_loss(outputs: &[(f64, Label)], cfg: &LossConfig) -> Result<f64> {
    if outputs.is_empty() {
        return Err(Error::InvalidArgument("contrastive loss of an empty output set".into()));
    }
    let mut total = 0.0;
    for (mi, li) in outputs {
        for (ml, ll) in outputs {
            let dist = (mi - ml).abs();
            total += if li == ll {
                dist * dist
            } else {
                let h = (cfg.margin - dist).max(0.0);
                h * h
            };
        }
    }
    let p = outputs.len() as f64;
    Ok(total / (p * p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg() -> LossConfig {
        LossConfig::new(0.25).unwrap()
    }

    #[test]
    fn hand_values() {
        assert_eq!(contrastive_loss(&[(0.3, Label::A); 4], &cfg()).unwrap(), 0.0);
        assert_eq!(contrastive_loss(&[(0.0, Label::A), (0.3, Label::B)], &cfg()).unwrap(), 0.0);
        let l = contrastive_loss(&[(0.1, Label::A), (0.2, Label::B)], &cfg()).unwrap();
        assert!((l - 0.01125).abs() < 1e-15);
        assert_eq!(contrastive_loss(&[(0.42, Label::B)], &cfg()).unwrap(), 0.0);
        assert!(contrastive_loss(&[], &cfg()).is_err());
        assert!(LossConfig::new(1.5).is_err());
    }

    fn outputs() -> impl Strategy<Value = Vec<(f64, Label)>> {
        prop::collection::vec((-0.5f64..0.5, prop::bool::ANY), 1..12)
            .prop_map(|v| v.into_iter().map(|(m, a)| (m, if a { Label::A } else { Label::B })).collect())
    }

    proptest! {
        #[test]
        fn permutation_invariant(v in outputs(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut w = v.clone();
            w.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let a = contrastive_loss(&v, &cfg()).unwrap();
            let b = contrastive_loss(&w, &cfg()).unwrap();
            prop_assert!((a - b).abs() < 1e-14);
        }

        #[test]
        fn label_swap_invariant(v in outputs()) {
            let swapped: Vec<_> = v.iter().map(|&(m, l)| (m, if l == Label::A { Label::B } else { Label::A })).collect();
            prop_assert_eq!(contrastive_loss(&v, &cfg()).unwrap(), contrastive_loss(&swapped, &cfg()).unwrap());
        }
    }
}

use serde::{Deserialize, Serialize};

use crate::data::Label;
use crate::error::{Error, Result};

/// Class means of the training outputs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Centroids {
    pub a: f64,
    pub b: f64,
}

impl Centroids {
    pub fn from_outputs(outputs: &[(f64, Label)]) -> Result<Self> {
        let mean = |label| {
            let v: Vec<f64> = outputs.iter().filter(|o| o.1 == label).map(|o| o.0).collect();
            if v.is_empty() {
                Err(Error::InvalidArgument(format!("no outputs of class {label} to average")))
            } else {
                Ok(v.iter().sum::<f64>() / v.len() as f64)
            }
        };
        Ok(Self {
            a: mean(Label::A)?,
            b: mean(Label::B)?,
        })
    }

    pub fn of(&self, label: Label) -> f64 {
        match label {
            Label::A => self.a,
            Label::B => self.b,
        }
    }

    /// Nearest centroid, `A` on ties.
    pub fn predict(&self, m: f64) -> Label {
        if (m - self.a).abs() <= (m - self.b).abs() {
            Label::A
        } else {
            Label::B
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub predictions: Vec<Label>,
    pub accuracy: f64,
    /// Smallest `|m − other| − |m − own|`; negative when something is
    /// misclassified.
    pub margin: f64,
}

pub fn classify(outputs: &[(f64, Label)], centroids: &Centroids) -> Result<Classification> {
    let Centroids { a, b } = *centroids;
    if (a - b).abs() < 1e-6 {
        return Err(Error::DegenerateCentroids { a, b });
    }
    if outputs.is_empty() {
        return Err(Error::InvalidArgument("nothing to classify".into()));
    }
    let predictions: Vec<Label> = outputs.iter().map(|&(m, _)| centroids.predict(m)).collect();
    let correct = predictions.iter().zip(outputs).filter(|(p, o)| **p == o.1).count();
    let margin = outputs
        .iter()
        .map(|&(m, l)| {
            let other = if l == Label::A { b } else { a };
            (m - other).abs() - (m - centroids.of(l)).abs()
        })
        .fold(f64::INFINITY, f64::min);
    Ok(Classification {
        predictions,
        accuracy: correct as f64 / outputs.len() as f64,
        margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outputs_at_centroids() {
        let outs = [(0.1, Label::A), (0.4, Label::B), (0.1, Label::A)];
        let c = Centroids::from_outputs(&outs).unwrap();
        assert_eq!(c, Centroids { a: 0.1, b: 0.4 });
        let r = classify(&outs, &c).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert!((r.margin - 0.3).abs() < 1e-15);
        assert_eq!(r.predictions, vec![Label::A, Label::B, Label::A]);
    }

    #[test]
    fn misclassification_gives_negative_margin() {
        let c = Centroids { a: 0.0, b: 1.0 };
        let r = classify(&[(0.9, Label::A), (1.0, Label::B)], &c).unwrap();
        assert_eq!(r.accuracy, 0.5);
        assert!((r.margin + 0.8).abs() < 1e-12);
    }

    #[test]
    fn degenerate_and_missing_classes() {
        let e = classify(&[(0.2, Label::A)], &Centroids { a: 0.2, b: 0.2 + 1e-8 }).unwrap_err();
        assert!(matches!(e, Error::DegenerateCentroids { .. }));
        assert!(Centroids::from_outputs(&[(0.2, Label::A)]).is_err());
    }
}

//! Projective x-basis measurement of a layer MPS by sequential conditional
//! sampling.
//!
//! With `A_p` the slices of a site tensor at the vectorized index `p`, the
//! outcome `±1` on a site selects `T± = ½(A₀₀ ± A₀₁ ± A₁₀ + A₁₁)`. The
//! remaining sites are closed with the trace vector, so conditional
//! probabilities are ratios of partial contractions.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::StreamKey;
use crate::tensor::{DenseTensor, C64, ONE};
use crate::tn::mps::{contract_physical, vec_mat};
use crate::tn::LayerMps;
use crate::vectorization::TRACE_VECTOR;

/// Probabilities below this (after normalization) are a hard error.
pub const NEGATIVE_TOLERANCE: f64 = 1e-6;

const HALF: C64 = C64::new(0.5, 0.0);
const T_PLUS: [C64; 4] = [HALF, HALF, HALF, HALF];
const T_MINUS: [C64; 4] = [HALF, C64::new(-0.5, 0.0), C64::new(-0.5, 0.0), HALF];

/// Precomputed contractions for repeated sampling from one state.
pub struct ShotSampler {
    plus: Vec<DenseTensor>,
    minus: Vec<DenseTensor>,
    /// `right[k]` closes sites `k..N` with the trace vector.
    right: Vec<Vec<C64>>,
}

/// Finite-shot estimate of the x-magnetization.
#[derive(Clone, Debug, PartialEq)]
pub struct ShotEstimate {
    pub shots: usize,
    pub sites: usize,
    /// Sum of all outcomes over shots and sites.
    pub outcome_sum: i64,
    /// `outcome_sum / (2 S N)`.
    pub value: f64,
    /// Per-shot outcomes when retained.
    pub outcomes: Option<Vec<Vec<i8>>>,
    /// Total probability mass moved by clamping small negative values.
    pub clamped_mass: f64,
    pub stream: StreamKey,
}

impl ShotSampler {
    /// Requires the state trace within 1e-4 of 1.
    pub fn new(state: &LayerMps) -> Result<Self> {
        let tr = state.trace();
        if (tr - ONE).norm() > 1e-4 {
            return Err(Error::InvalidArgument(format!("cannot sample a state with trace {tr}")));
        }
        let n = state.len();
        let plus: Vec<DenseTensor> = state.sites().iter().map(|s| contract_physical(s, &T_PLUS)).collect();
        let minus: Vec<DenseTensor> = state.sites().iter().map(|s| contract_physical(s, &T_MINUS)).collect();
        let mut right = vec![vec![ONE]; n + 1];
        for k in (0..n).rev() {
            let t = contract_physical(&state.sites()[k], &TRACE_VECTOR);
            right[k] = t.matvec(&right[k + 1]);
        }
        Ok(Self { plus, minus, right })
    }

    pub fn sites(&self) -> usize {
        self.plus.len()
    }

    /// Conditional probability of `+1` at site `k` given the normalized
    /// left environment, after clamping. Returns `(p_plus, clamped_mass)`.
    fn conditional(&self, k: usize, left: &[C64]) -> Result<(f64, Vec<C64>, Vec<C64>, f64)> {
        let lp = vec_mat(left, &self.plus[k]);
        let lm = vec_mat(left, &self.minus[k]);
        let r = &self.right[k + 1];
        let pp: f64 = lp.iter().zip(r).map(|(a, b)| a * b).sum::<C64>().re;
        let pm: f64 = lm.iter().zip(r).map(|(a, b)| a * b).sum::<C64>().re;
        let total = pp + pm;
        let (pp, pm) = (pp / total, pm / total);
        for p in [pp, pm] {
            if p < -NEGATIVE_TOLERANCE || !p.is_finite() {
                return Err(Error::NegativeProbability { site: k, p });
            }
        }
        let clamped = (-pp).max(0.0) + (-pm).max(0.0) + (pp - 1.0).max(0.0) + (pm - 1.0).max(0.0);
        let (cp, cm) = (pp.clamp(0.0, 1.0), pm.clamp(0.0, 1.0));
        Ok((cp / (cp + cm), lp, lm, clamped))
    }

    /// One shot: an outcome `±1` per site, sampled left to right.
    pub fn sample_shot<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(Vec<i8>, f64)> {
        let mut left = vec![ONE];
        let mut outcomes = Vec::with_capacity(self.sites());
        let mut clamped = 0.0;
        for k in 0..self.sites() {
            let (p_plus, lp, lm, c) = self.conditional(k, &left)?;
            clamped += c;
            let u: f64 = rng.random();
            let (outcome, next, p) = if u < p_plus { (1i8, lp, p_plus) } else { (-1i8, lm, 1.0 - p_plus) };
            outcomes.push(outcome);
            // renormalize so that left · right[k+1] stays 1
            let norm: C64 = next.iter().zip(&self.right[k + 1]).map(|(a, b)| a * b).sum();
            let scale = if norm.norm() > 0.0 { norm } else { C64::new(p, 0.0) };
            left = next.into_iter().map(|x| x / scale).collect();
        }
        Ok((outcomes, clamped))
    }

    /// Product of the conditional probabilities along `outcomes`.
    pub fn chain_probability(&self, outcomes: &[i8]) -> Result<f64> {
        let mut left = vec![ONE];
        let mut prob = 1.0;
        for (k, &o) in outcomes.iter().enumerate() {
            let (p_plus, lp, lm, _) = self.conditional(k, &left)?;
            let (next, p) = if o > 0 { (lp, p_plus) } else { (lm, 1.0 - p_plus) };
            prob *= p;
            if p == 0.0 {
                return Ok(0.0);
            }
            let norm: C64 = next.iter().zip(&self.right[k + 1]).map(|(a, b)| a * b).sum();
            left = next.into_iter().map(|x| x / norm).collect();
        }
        Ok(prob)
    }

    /// Joint probability by a single contraction, normalized by the trace.
    pub fn joint_probability(&self, outcomes: &[i8]) -> f64 {
        let mut left = vec![ONE];
        for (k, &o) in outcomes.iter().enumerate() {
            left = vec_mat(&left, if o > 0 { &self.plus[k] } else { &self.minus[k] });
        }
        (left[0] / self.right[0][0]).re
    }

    /// `S` shots; shot `s` draws from `stream.child(s)`.
    pub fn estimate(&self, shots: usize, stream: StreamKey, retain: bool) -> Result<ShotEstimate> {
        if shots == 0 {
            return Err(Error::InvalidArgument("at least one shot is required".into()));
        }
        let mut sum = 0i64;
        let mut clamped = 0.0;
        let mut kept = retain.then(|| Vec::with_capacity(shots));
        for s in 0..shots {
            let (outcomes, c) = self.sample_shot(&mut stream.child(s as u64).rng())?;
            sum += outcomes.iter().map(|&o| o as i64).sum::<i64>();
            clamped += c;
            if let Some(k) = kept.as_mut() {
                k.push(outcomes);
            }
        }
        if clamped > 0.0 {
            log::debug!("clamped probability mass {clamped:.3e} over {shots} shots");
        }
        let n = self.sites();
        Ok(ShotEstimate {
            shots,
            sites: n,
            outcome_sum: sum,
            value: sum as f64 / (2.0 * shots as f64 * n as f64),
            outcomes: kept,
            clamped_mass: clamped,
            stream,
        })
    }
}

/// One shot drawn from `state`.
pub fn sample_shot<R: Rng + ?Sized>(state: &LayerMps, rng: &mut R) -> Result<Vec<i8>> {
    Ok(ShotSampler::new(state)?.sample_shot(rng)?.0)
}

/// `m_S = (1/2SN) Σ_{s,k} m_k^s` over `shots` shots.
pub fn estimate_magnetization(state: &LayerMps, shots: usize, stream: StreamKey) -> Result<ShotEstimate> {
    ShotSampler::new(state)?.estimate(shots, stream, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{x_outcome_probabilities, DenseLayerState};
    use crate::tensor::SvdTruncation;
    use crate::tn::product_state_mps;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn outcomes_of(index: usize, n: usize) -> Vec<i8> {
        (0..n).map(|k| if (index >> (n - 1 - k)) & 1 == 0 { 1 } else { -1 }).collect()
    }

    #[test]
    fn plus_state_is_deterministic() {
        let s = product_state_mps([0.5, 0.0, 0.0], 6).unwrap();
        let est = estimate_magnetization(&s, 50, StreamKey::root(1)).unwrap();
        assert_eq!(est.value, 0.5);
        assert_eq!(est.outcome_sum, 300);
    }

    #[test]
    fn vacuum_outcomes_are_fair_coins() {
        let s = product_state_mps([0.0, 0.0, 0.5], 1).unwrap();
        let sampler = ShotSampler::new(&s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let draws = 10_000;
        let plus = (0..draws).filter(|_| sampler.sample_shot(&mut rng).unwrap().0[0] == 1).count();
        let sigma = (draws as f64 * 0.25).sqrt();
        assert!((plus as f64 - draws as f64 / 2.0).abs() < 3.0 * sigma);
    }

    #[test]
    fn chain_rule_matches_dense_born_probabilities() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = DenseLayerState::random_product(&mut rng, 4);
        let b = DenseLayerState::random_product(&mut rng, 4);
        let rho = a.rho().scale(C64::new(0.6, 0.0)).add(&b.rho().scale(C64::new(0.4, 0.0))).unwrap();
        let dense = DenseLayerState::new(rho, 4).unwrap();
        let mps = LayerMps::from_dense(&dense, &SvdTruncation::unlimited()).unwrap();
        let sampler = ShotSampler::new(&mps).unwrap();
        let born = x_outcome_probabilities(dense.rho(), 4);
        for (i, p) in born.iter().enumerate() {
            let o = outcomes_of(i, 4);
            assert!((sampler.chain_probability(&o).unwrap() - p).abs() < 1e-10);
            assert!((sampler.joint_probability(&o) - p).abs() < 1e-10);
        }
    }

    #[test]
    fn estimate_is_average_of_retained_outcomes() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = product_state_mps(crate::oracle::random_bloch(&mut rng), 3).unwrap();
        let est = ShotSampler::new(&s).unwrap().estimate(40, StreamKey::root(9), true).unwrap();
        let all = est.outcomes.as_ref().unwrap();
        let sum: i64 = all.iter().flatten().map(|&o| o as i64).sum();
        assert_eq!(sum, est.outcome_sum);
        assert_eq!(est.value, sum as f64 / 240.0);
        assert!(est.value.abs() <= 0.5);
    }

    #[test]
    fn identical_streams_give_identical_shots() {
        let s = product_state_mps([0.1, 0.2, (0.25f64 - 0.05).sqrt()], 5).unwrap();
        let a = ShotSampler::new(&s).unwrap().estimate(30, StreamKey::root(5).child(2), true).unwrap();
        let b = ShotSampler::new(&s).unwrap().estimate(30, StreamKey::root(5).child(2), true).unwrap();
        assert_eq!(a, b);
        let c = ShotSampler::new(&s).unwrap().estimate(30, StreamKey::root(5).child(3), true).unwrap();
        assert_ne!(a.outcomes, c.outcomes);
    }

    #[test]
    fn corrupted_state_is_rejected() {
        // a "state" with a strongly negative x-probability
        let mut site = DenseTensor::zeros(&[1, 4, 1]);
        for (p, v) in [(0, 0.5), (1, -0.8), (2, -0.8), (3, 0.5)] {
            site.set(&[0, p, 0], C64::new(v, 0.0));
        }
        let s = LayerMps::from_sites(vec![site], 1).unwrap();
        let err = sample_shot(&s, &mut ChaCha8Rng::seed_from_u64(1)).unwrap_err();
        assert!(matches!(err, Error::NegativeProbability { site: 0, .. }));
        let not_normalized = product_state_mps([0.0, 0.0, 0.5], 2).unwrap();
        let mut sites = not_normalized.sites().to_vec();
        sites[0] = sites[0].scale(C64::new(2.0, 0.0));
        assert!(ShotSampler::new(&LayerMps::from_sites(sites, 1).unwrap()).is_err());
    }

    #[test]
    fn zero_shots_is_an_error() {
        let s = product_state_mps([0.0, 0.0, 0.5], 2).unwrap();
        assert!(estimate_magnetization(&s, 0, StreamKey::root(0)).is_err());
    }
}

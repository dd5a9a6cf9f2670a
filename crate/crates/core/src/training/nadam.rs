use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nadam hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NadamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub learning_rate: f64,
    pub delta: f64,
}

impl NadamConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::InvalidArgument(format!("{name} must lie in [0, 1), got {b}")));
            }
        }
        if !(self.learning_rate > 0.0) || !(self.delta > 0.0) {
            return Err(Error::InvalidArgument("learning rate and delta must be positive".into()));
        }
        Ok(())
    }
}

/// Moment estimates after `round` updates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub round: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl OptimizerState {
    pub fn new(dim: usize) -> Self {
        Self {
            round: 0,
            m: vec![0.0; dim],
            v: vec![0.0; dim],
        }
    }
}

/// Advances the moments by one round and returns the update direction
/// `f_r = (β₁ m̂_r + (1 − β₁)/(1 − β₁ʳ) g) / (√v̂_r + δ)`. The caller
/// subtracts `λ f_r` from the parameters.
pub fn nadam_step(state: &mut OptimizerState, cfg: &NadamConfig, grad: &[f64]) -> Result<Vec<f64>> {
    if grad.len() != state.m.len() {
        return Err(Error::Shape(format!("gradient has {} entries, optimizer {}", grad.len(), state.m.len())));
    }
    let r = state.round + 1;
    let (b1, b2) = (cfg.beta1, cfg.beta2);
    let c1 = 1.0 - b1.powi(r as i32);
    let c2 = 1.0 - b2.powi(r as i32);
    let mut f = Vec::with_capacity(grad.len());
    for ((m, v), &g) in state.m.iter_mut().zip(state.v.iter_mut()).zip(grad) {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        f.push((b1 * m_hat + (1.0 - b1) / c1 * g) / (v_hat.sqrt() + cfg.delta));
    }
    state.round = r;
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dataset_i() -> NadamConfig {
        NadamConfig {
            beta1: 0.75,
            beta2: 0.98,
            learning_rate: 0.05,
            delta: 1e-7,
        }
    }

    #[test]
    fn zero_gradient_gives_zero_update() {
        let mut s = OptimizerState::new(3);
        for _ in 0..5 {
            assert_eq!(nadam_step(&mut s, &dataset_i(), &[0.0; 3]).unwrap(), vec![0.0; 3]);
        }
        assert_eq!(s.round, 5);
    }

    #[test]
    fn first_step_by_hand() {
        let mut s = OptimizerState::new(1);
        let f = nadam_step(&mut s, &dataset_i(), &[2.0]).unwrap();
        assert!((f[0] - 3.5 / (2.0 + 1e-7)).abs() < 1e-15);
        assert!((s.m[0] - 0.5).abs() < 1e-15);
        assert!((s.v[0] - 0.08).abs() < 1e-15);
    }

    #[test]
    fn constant_gradient_tends_to_sign() {
        let mut s = OptimizerState::new(2);
        let mut f = vec![];
        for _ in 0..2000 {
            f = nadam_step(&mut s, &dataset_i(), &[0.3, -7.0]).unwrap();
        }
        assert!((f[0] - 1.0).abs() < 1e-5 && (f[1] + 1.0).abs() < 1e-5, "{f:?}");
    }

    #[test]
    fn memoryless_limit_is_sign_descent() {
        let cfg = NadamConfig {
            beta1: 0.0,
            beta2: 0.0,
            ..dataset_i()
        };
        let mut s = OptimizerState::new(2);
        for g in [[0.5, -2.0], [-1e-3, 4.0]] {
            let f = nadam_step(&mut s, &cfg, &g).unwrap();
            for (fi, gi) in f.iter().zip(g) {
                assert!((fi - gi / (gi.abs() + cfg.delta)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn minimizes_a_parabola() {
        let cfg = dataset_i();
        let mut s = OptimizerState::new(1);
        let mut x = 1.0f64;
        let mut hit = None;
        for step in 1..=500 {
            let f = nadam_step(&mut s, &cfg, &[2.0 * x]).unwrap();
            x -= cfg.learning_rate * f[0];
            if hit.is_none() && x.abs() < 1e-3 {
                hit = Some(step);
            }
        }
        assert!(hit.is_some() && x.abs() < 1e-3, "x = {x}");
    }

    #[test]
    fn rejects_bad_input() {
        let mut s = OptimizerState::new(2);
        assert!(nadam_step(&mut s, &dataset_i(), &[1.0]).is_err());
        assert!(NadamConfig { beta1: 1.0, ..dataset_i() }.validate().is_err());
    }
}

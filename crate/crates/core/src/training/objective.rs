use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{BlochSample, Label};
use crate::error::{Error, Result};
use crate::model::{NetworkConfig, ParamSet, Pauli};
use crate::rng::StreamKey;
use crate::sampler::ShotSampler;
use crate::tn::{Backend, BondDims, Propagator, TruncConfig};

use super::loss::{contrastive_loss, LossConfig};

/// How network outputs are computed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub network: NetworkConfig,
    pub backend: Backend,
    pub chis: BondDims,
    #[serde(default)]
    pub trunc: TruncConfig,
    /// Shots per state; `None` uses exact expectations.
    pub shots: Option<usize>,
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        if self.shots == Some(0) {
            return Err(Error::InvalidArgument("shot count must be positive".into()));
        }
        if self.chis.chi_mpo == 0 || self.chis.chi_mps == 0 {
            return Err(Error::InvalidArgument("bond dimensions must be positive".into()));
        }
        Ok(())
    }

    pub fn propagator(&self, params: &ParamSet) -> Result<Propagator> {
        Propagator::new(self.backend, params, &self.network, self.chis, &self.trunc)
    }
}

/// A sample paired with its index in the dataset; the index selects its shot
/// stream.
pub type Indexed<'a> = (usize, &'a BlochSample);

/// Output magnetization of one state under an already built propagator.
pub fn output_of(prop: &Propagator, sample: &BlochSample, shots: Option<usize>, stream: StreamKey) -> Result<f64> {
    let out = prop.evolve(&sample.to_input_state(prop.config().sites)?)?;
    match shots {
        None => Ok(out.magnetization_expectation(Pauli::X)),
        Some(s) => Ok(ShotSampler::new(&out)?.estimate(s, stream, false)?.value),
    }
}

/// Output magnetizations in input order. State `id` draws its shots from
/// `stream.child(id)`.
pub fn network_outputs(params: &ParamSet, samples: &[Indexed], eval: &EvalConfig, stream: StreamKey) -> Result<Vec<(f64, Label)>> {
    let prop = eval.propagator(params)?;
    samples
        .par_iter()
        .map(|&(id, s)| Ok((output_of(&prop, s, eval.shots, stream.child(id as u64))?, s.label)))
        .collect()
}

pub fn loss_of_params(params: &ParamSet, samples: &[Indexed], eval: &EvalConfig, loss: &LossConfig, stream: StreamKey) -> Result<f64> {
    contrastive_loss(&network_outputs(params, samples, eval, stream)?, loss)
}

/// Forward differences of `f` at `x`. `f(e, y)` is evaluation `e`: the base
/// point is evaluation 0 and the shift of component `k` is evaluation `k + 1`.
/// Returns the base value and the gradient.
pub fn forward_difference<F>(f: F, x: &[f64], eps: f64) -> Result<(f64, Vec<f64>)>
where
    F: Fn(usize, &[f64]) -> Result<f64> + Sync,
{
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("finite-difference step must be positive, got {eps}")));
    }
    let values: Vec<f64> = (0..=x.len())
        .into_par_iter()
        .map(|e| {
            let mut y = x.to_vec();
            if e > 0 {
                y[e - 1] += eps;
            }
            f(e, &y)
        })
        .collect::<Result<_>>()?;
    let base = values[0];
    Ok((base, values[1..].iter().map(|v| (v - base) / eps).collect()))
}

/// Centered differences, used as a reference.
pub fn centered_difference<F>(f: F, x: &[f64], eps: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    (0..x.len())
        .into_par_iter()
        .map(|k| {
            let mut hi = x.to_vec();
            let mut lo = x.to_vec();
            hi[k] += eps;
            lo[k] -= eps;
            Ok((f(&hi)? - f(&lo)?) / (2.0 * eps))
        })
        .collect()
}

/// Shot streams of the gradient evaluations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseMode {
    /// Every evaluation draws its own shots.
    #[default]
    FreshShots,
    /// Base and shifted evaluations reuse the same shots.
    CommonRandomNumbers,
}

/// Base loss and forward-difference gradient over the masked slots.
pub fn finite_diff_gradient(
    params: &ParamSet,
    samples: &[Indexed],
    eval: &EvalConfig,
    loss: &LossConfig,
    eps: f64,
    noise: NoiseMode,
    stream: StreamKey,
) -> Result<(f64, Vec<f64>)> {
    forward_difference(
        |e, y| {
            let mut p = params.clone();
            p.set_flat(y)?;
            let key = match noise {
                NoiseMode::FreshShots => stream.child(e as u64),
                NoiseMode::CommonRandomNumbers => stream.child(0),
            };
            loss_of_params(&p, samples, eval, loss, key)
        },
        &params.flat(),
        eps,
    )
}

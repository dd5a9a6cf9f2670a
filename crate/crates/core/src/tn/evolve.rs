use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::lindblad::{guard, DENSE_MAX_SITES};
use crate::model::{NetworkConfig, ParamSet, Pauli};
use crate::oracle::{build_dense_channel, layer_step_dense, DenseChannel};
use crate::tensor::SvdTruncation;

use super::mpo::{apply_mpo, build_layer_mpo, LayerMpo};
use super::mps::LayerMps;
use super::sweep::{sweep_with, ReducedGates};
use super::TruncConfig;

/// Trace deviation of a single layer output that is reported as a warning.
pub const TRACE_WARNING: f64 = 1e-4;

/// How a layer is propagated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// Exact density matrices, `N ≤ 6`.
    Dense,
    /// Layer MPO built once and applied to each state.
    #[default]
    Mpo,
    /// Gates applied directly to each state.
    Sweep,
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dense" => Ok(Backend::Dense),
            "mpo" => Ok(Backend::Mpo),
            "sweep" => Ok(Backend::Sweep),
            other => Err(Error::InvalidArgument(format!("unknown backend {other:?} (expected dense, mpo or sweep)"))),
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Dense => "dense",
            Backend::Mpo => "mpo",
            Backend::Sweep => "sweep",
        })
    }
}

/// Bond-dimension caps of the channel and of the states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BondDims {
    pub chi_mpo: usize,
    pub chi_mps: usize,
}

impl Default for BondDims {
    fn default() -> Self {
        Self { chi_mpo: 16, chi_mps: 48 }
    }
}

impl BondDims {
    pub fn new(chi_mpo: usize, chi_mps: usize) -> Self {
        Self { chi_mpo, chi_mps }
    }

    pub fn unlimited() -> Self {
        Self::new(super::UNLIMITED, super::UNLIMITED)
    }
}

enum Kind {
    DenseChannel(DenseChannel),
    DenseRegister(ParamSet),
    Mpo(LayerMpo),
    Sweep(ReducedGates),
}

/// One layer of the network for fixed parameters, prepared once and
/// applied to any number of states.
pub struct Propagator {
    kind: Kind,
    config: NetworkConfig,
    chis: BondDims,
    trunc: TruncConfig,
}

/// Per-layer magnetizations `ℓ = 0..=L` and the output state.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub values: Vec<f64>,
    pub state: LayerMps,
}

impl Propagator {
    pub fn new(backend: Backend, params: &ParamSet, config: &NetworkConfig, chis: BondDims, trunc: &TruncConfig) -> Result<Self> {
        config.validate()?;
        let kind = match backend {
            Backend::Dense => {
                guard(config.sites, DENSE_MAX_SITES)?;
                if config.sites <= 5 {
                    Kind::DenseChannel(build_dense_channel(params, config)?)
                } else {
                    Kind::DenseRegister(params.clone())
                }
            }
            Backend::Mpo => Kind::Mpo(build_layer_mpo(params, config, chis.chi_mpo, trunc)?),
            Backend::Sweep => Kind::Sweep(ReducedGates::new(params, config.dt)),
        };
        Ok(Self {
            kind,
            config: *config,
            chis,
            trunc: *trunc,
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn mpo(&self) -> Option<&LayerMpo> {
        match &self.kind {
            Kind::Mpo(m) => Some(m),
            _ => None,
        }
    }

    /// One layer, rescaled to unit trace; a deviation above
    /// [`TRACE_WARNING`] before rescaling is logged.
    pub fn step(&self, state: &LayerMps) -> Result<LayerMps> {
        if state.len() != self.config.sites {
            return Err(Error::Shape(format!("state has {} sites, network {}", state.len(), self.config.sites)));
        }
        let mut out = match &self.kind {
            Kind::DenseChannel(ch) => self.compress_dense(ch.apply(&state.to_dense()?), state)?,
            Kind::DenseRegister(p) => self.compress_dense(layer_step_dense(p, &self.config, &state.to_dense()?)?, state)?,
            Kind::Mpo(mpo) => apply_mpo(state, mpo, self.chis.chi_mps, &self.trunc)?,
            Kind::Sweep(g) => sweep_with(state, g, self.chis.chi_mps, &self.trunc)?,
        };
        let tr = out.normalize_trace()?;
        let defect = (tr - 1.0).norm();
        if defect > TRACE_WARNING {
            log::warn!("layer output trace {tr} deviates from 1 (discarded weight {:.3e}); rescaled", out.discarded_weight());
        } else if defect > 1e-6 {
            log::debug!("layer output trace {tr} rescaled to 1");
        }
        Ok(out)
    }

    fn compress_dense(&self, d: crate::oracle::DenseLayerState, previous: &LayerMps) -> Result<LayerMps> {
        let mps = LayerMps::from_dense(&d, &SvdTruncation::new(None, self.trunc.rel_cutoff))?;
        let (sites, w) = mps.into_parts();
        Ok(LayerMps::from_parts(sites, Some(self.config.sites - 1), super::UNLIMITED, previous.discarded_weight() + w))
    }

    /// All `L` layers.
    pub fn evolve(&self, input: &LayerMps) -> Result<LayerMps> {
        let mut state = input.clone();
        for _ in 0..self.config.layers {
            state = self.step(&state)?;
        }
        Ok(state)
    }

    /// All `L` layers, recording the magnetization along `axis` before the
    /// first and after every layer.
    pub fn trajectory(&self, input: &LayerMps, axis: Pauli) -> Result<Trajectory> {
        let mut state = input.clone();
        let mut values = Vec::with_capacity(self.config.layers + 1);
        values.push(state.magnetization_expectation(axis));
        for _ in 0..self.config.layers {
            state = self.step(&state)?;
            values.push(state.magnetization_expectation(axis));
        }
        Ok(Trajectory { values, state })
    }
}

/// `m^x` after each of the `L` layers (and at the input) using the MPO
/// backend.
pub fn evolve_trajectory(state: &LayerMps, params: &ParamSet, config: &NetworkConfig, chis: BondDims, trunc: &TruncConfig) -> Result<Trajectory> {
    Propagator::new(Backend::Mpo, params, config, chis, trunc)?.trajectory(state, Pauli::X)
}

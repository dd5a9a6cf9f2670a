//! Matrix-product representations of layer states and of the layer channel.

mod chain;
pub mod evolve;
pub mod mpo;
pub mod mps;
pub mod sweep;

use serde::{Deserialize, Serialize};

use crate::tensor::{SvdTruncation, DEFAULT_REL_CUTOFF};

pub use evolve::{evolve_trajectory, Backend, BondDims, Propagator, Trajectory};
pub use mpo::{apply_mpo, build_layer_mpo, LayerMpo};
pub use mps::{product_state_mps, LayerMps};
pub use sweep::sweep_evolve;

/// Bond dimension meaning "no cap".
pub const UNLIMITED: usize = usize::MAX;

/// Truncation tolerances shared by every SVD in the engine.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TruncConfig {
    pub rel_cutoff: f64,
    /// Discarded weight per application above which a warning is logged.
    pub alarm_threshold: f64,
}

impl Default for TruncConfig {
    fn default() -> Self {
        Self {
            rel_cutoff: DEFAULT_REL_CUTOFF,
            alarm_threshold: 1e-3,
        }
    }
}

impl TruncConfig {
    pub(crate) fn policy(&self, chi: usize) -> SvdTruncation {
        SvdTruncation::new((chi != UNLIMITED).then_some(chi), self.rel_cutoff)
    }

    pub(crate) fn check_alarm(&self, what: &str, weight: f64) {
        if weight > self.alarm_threshold {
            log::warn!("{what}: discarded weight {weight:.3e} exceeds alarm threshold {:.1e}", self.alarm_threshold);
        }
    }
}

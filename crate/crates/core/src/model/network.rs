use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the chain end without a left neighbour is treated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Open chain: the first site's gate only keeps `α1 = I` terms.
    #[default]
    Open,
}

/// Geometry of the layered network: `layers + 1` layers of `sites` qubits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub sites: usize,
    /// Number of propagation steps `L`.
    pub layers: usize,
    pub dt: f64,
    #[serde(default)]
    pub boundary: Boundary,
}

impl NetworkConfig {
    pub fn new(sites: usize, layers: usize, dt: f64) -> Result<Self> {
        let c = Self {
            sites,
            layers,
            dt,
            boundary: Boundary::Open,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sites < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 sites, got {}", self.sites)));
        }
        if self.layers < 1 {
            return Err(Error::InvalidArgument("need at least one propagation step".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {}", self.dt)));
        }
        Ok(())
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }
}

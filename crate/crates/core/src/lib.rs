//! Layered quantum neural network built from a repeated collision channel,
//! with exact dense references, tensor-network propagation, projective
//! sampling and a contrastive training loop.

pub mod config;
pub mod data;
pub mod error;
pub mod model;
pub mod oracle;
pub mod rng;
pub mod sampler;
pub mod tensor;
pub mod tn;
pub mod training;
pub mod vectorization;

pub use error::{Error, Result};
pub use model::{NetworkConfig, ParamSet, Pauli};

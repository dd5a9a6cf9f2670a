//! Contrastive loss, finite-difference gradients, Nadam and the minibatch
//! training loop.

pub mod classify;
pub mod loss;
pub mod nadam;
pub mod objective;
pub mod train;

pub use classify::{classify, Centroids, Classification};
pub use loss::{contrastive_loss, LossConfig};
pub use nadam::{nadam_step, NadamConfig, OptimizerState};
pub use objective::{finite_diff_gradient, loss_of_params, network_outputs, EvalConfig, Indexed, NoiseMode};
pub use train::{RoundRecord, TrainConfig, TrainHistory, TrainSetup, Trainer};

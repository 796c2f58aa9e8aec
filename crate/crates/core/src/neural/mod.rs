//! Dense-network machinery shared by the neural forecasters: layers,
//! explicit backpropagation, optimizers, training with early stopping,
//! doubly residual block stacks and checkpoints.

pub mod checkpoint;
pub(crate) mod forecaster;
pub mod layer;
pub mod network;
pub mod optim;
pub mod residual;
pub mod train;

pub use layer::{forward, Activation, DenseLayer, Gradients, LayerGrad};
pub use network::{backward, max_relative_error, numeric_gradient, Loss, Mlp, Network};
pub use optim::{adam_step, sgd_step, AdamState, OptimizerKind};
pub use residual::{BasisBlock, Decomposed, PoolKind, Pooling, ResidualStackNet, Stack};
pub use train::{train, History, TrainConfig};

#[cfg(test)]
mod tests;

//! Dense feed-forward regressor trained from scratch.
//!
//! Hidden layers use ReLU followed by inverted dropout; the output layer is a
//! single linear unit. Training minimizes mean absolute error with RMSProp
//! over shuffled mini-batches.

mod backprop;
mod dropout;
mod loss;
mod model;
mod rmsprop;
mod train;

pub use backprop::{Gradients, LayerGradients};
pub use dropout::apply_dropout;
pub use loss::{mae_loss, mae_subgradient};
pub use model::{init_model, relu, DenseLayer, ForwardCache, MlpModel, HIDDEN_SIZES};
pub use rmsprop::{rmsprop_step, RmsProp, RmsPropState};
pub use train::{train, TrainConfig, TrainHistory};

//! Small MLP/ConvNet training core over flat parameter vectors.

mod arch;
mod model;
mod net;
mod train;

pub use arch::{Activation, ArchKind, ArchSpec, LayerKind, LayerSlot};
pub(crate) use model::blend;
pub use model::{init_model, OUTPUT_GAIN, interpolate_params, GradVector, ModelState};
pub(crate) use net::Gates;
pub(crate) use train::{loss_and_grad_gated, loss_grad_input, relu_gates};
pub use train::{evaluate, loss, loss_and_grad, sgd_step, train, Eval, TrainConfig, TrainedModel};

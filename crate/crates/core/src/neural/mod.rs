//! Layers with explicit forward/backward passes, and Adam.
//!
//! There is no autograd graph: each layer returns a cache from `forward` and consumes it in
//! `backward`, accumulating parameter gradients into [`Param::grad`]. All arithmetic is f64.

mod activation;
mod adam;
mod conv1d;
mod conv2d;
mod dropout;
pub(crate) mod gemm;
mod linear;
mod loss;
mod norm;
mod tensor;

pub use activation::{selu, selu_backward, selu_forward, selu_grad, SELU_ALPHA, SELU_LAMBDA};
pub use adam::{adam_step, AdamConfig, AdamState};
pub use conv1d::{dilated_causal_conv1d, Conv1dCache, DilatedConv1d};
pub use conv2d::{max_pool2x2, max_pool2x2_backward, Conv2d, Conv2dCache, MaxPoolCache};
pub use dropout::{Dropout, DropoutMask};
pub use linear::Linear;
pub use loss::{softmax, softmax_cross_entropy};
pub use norm::{layer_norm, LayerNorm, LayerNormCache, LAYER_NORM_EPS};
pub use tensor::{Param, Parameterized, Tensor};

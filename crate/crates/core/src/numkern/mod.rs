//! Dense `f64` kernels with paired forward/backward passes.
//!
//! Each cached kernel (`MatMul`, `SoftmaxTemp`, `LayerNorm`, ...) stores what
//! its backward pass needs during `forward`; calling `backward` first is a
//! state error. Backward passes accumulate into the caller's gradient buffers.
//! Kernels are not synchronised: drive one graph from one thread.

mod activation;
pub mod gradcheck;
mod layernorm;
mod matmul;
mod matrix;
pub mod rng;
mod softmax;

pub use activation::{check_dropout_p, mse, relu, sigmoid, Dropout, Mse, Relu, Sigmoid};
pub use layernorm::{layernorm, LayerNorm, DEFAULT_EPS as LAYERNORM_EPS};
pub use matmul::{matmul, matmul_nt, MatMul};
pub use matrix::{DualTensor, Matrix};
pub use softmax::{softmax_temp, softmax_temp_backward, SoftmaxTemp};

//! Dense `f64` tensors, reverse-mode differentiation and optimizers.

mod backend;
mod kernels;
mod ops;
mod optim;
mod param;
mod tape;
mod tensor;

pub mod gradcheck;

pub use backend::{Backend, Eager};
pub use kernels::matmul_seq;
#[cfg(feature = "parallel")]
pub use kernels::matmul_par;
pub use optim::{clip_grad_norm, Adam};
pub use param::{Param, ParamId, Parameterized};
pub use tape::{Gradients, Tape, Var};
pub use tensor::Tensor;

/// Layer-norm stabilizer added to the variance inside the square root.
pub const LAYER_NORM_EPS: f64 = 1e-9;

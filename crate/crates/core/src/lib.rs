//! Multi-agent actor-critic learners (MADDPG, recurrent MADDPG and the
//! hierarchical RNN + transformer variant) on deterministic particle worlds.
//!
//! The crate is layered bottom-up:
//!
//! * [`numcore`]: dense `f64` tensors, a reverse-mode tape and Adam.
//! * [`nets`]: MLPs, tanh RNNs, position codes, multi-head attention,
//!   transformer blocks and the hierarchical encoder stack.
//! * [`envs`]: the four particle-world scenarios and their rewards.
//! * [`marl`]: replay, exploration, critic/actor updates and target blending.
//! * [`harness`]: seeded training and evaluation runs, metrics and checkpoints.
//!
//! With the default `parallel` feature, matrix products over large row counts
//! and independent evaluation episodes/runs are spread over a rayon pool.
//! Disabling it gives a purely sequential build with identical numerics.

pub mod envs;
pub mod error;
pub mod harness;
pub mod marl;
pub mod nets;
pub mod numcore;
pub mod par;

pub use error::{Error, Result};

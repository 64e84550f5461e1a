//! Network blocks: MLP heads, the tanh RNN with its recursive position code,
//! sinusoidal embeddings, multi-head self-attention, post-norm transformer
//! blocks and the hierarchical encoder stack.
//!
//! Sequences are batched step-major for the recurrent part (`K` tensors of
//! shape `[B, width]`) and sample-major for attention (`[B·K, d_s]`, row
//! `b·K + t`).

mod attention;
mod encoder;
mod init;
mod mlp;
mod position;
mod rnn;

pub use attention::{AttentionHooks, TransformerBlockParams};
pub use encoder::{EncoderConfig, EncoderStack, Encoded, PositionMode};
pub use init::{glorot, zeros};
pub use mlp::{Activation, Linear, MlpParams};
pub use position::sinusoidal_pe;
pub use rnn::RnnParams;

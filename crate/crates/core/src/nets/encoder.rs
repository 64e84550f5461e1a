use rand::Rng;

use super::attention::TransformerBlockParams;
use super::init::glorot;
use super::mlp::Linear;
use super::position::sinusoidal_pe;
use super::rnn::RnnParams;
use crate::numcore::{Backend, Param, Parameterized, Tensor};
use crate::{Error, Result};

/// How step positions are injected into the tokens.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PositionMode {
    /// Recursive codes from a second RNN run over the step hidden states.
    Recursive,
    /// Fixed sine/cosine embeddings added to the projected tokens.
    Sinusoidal,
    None,
}

impl PositionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PositionMode::Recursive => "recursive",
            PositionMode::Sinusoidal => "sinusoidal",
            PositionMode::None => "none",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "recursive" => Ok(PositionMode::Recursive),
            "sinusoidal" => Ok(PositionMode::Sinusoidal),
            "none" => Ok(PositionMode::None),
            other => Err(Error::Config(format!("unknown position mode `{other}`"))),
        }
    }
}

/// Widths of one [`EncoderStack`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EncoderConfig {
    pub obs_dim: usize,
    /// Width of the per-step observation projection feeding the RNN.
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub model_dim: usize,
    pub heads: usize,
    pub ff_dim: usize,
    pub depth: usize,
    pub position: PositionMode,
}

/// Step-level RNN encoder followed by `depth` stacked transformer blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderStack {
    /// Per-step observation projection.
    pub input: Linear,
    pub step_rnn: RnnParams,
    /// Generates the recursive position codes from the step hidden states.
    pub position_rnn: RnnParams,
    /// `[hidden, d_s]` token projection.
    pub embedding: Param,
    pub blocks: Vec<TransformerBlockParams>,
    pub position: PositionMode,
}

/// Output of [`EncoderStack::encode`].
#[derive(Clone, Debug)]
pub struct Encoded<T> {
    /// `[B·K, d_s]`, sample-major.
    pub sequence: T,
    /// Last-position token of every sample, `[B, d_s]`.
    pub pooled: T,
}

impl EncoderStack {
    pub fn new<R: Rng + ?Sized>(rng: &mut R, cfg: &EncoderConfig) -> Result<Self> {
        if cfg.depth == 0 {
            return Err(Error::Invalid("encoder depth must be at least 1".into()));
        }
        if cfg.position == PositionMode::Sinusoidal && !cfg.model_dim.is_multiple_of(2) {
            return Err(Error::Invalid("sinusoidal positions need an even model width".into()));
        }
        let input = Linear::new(rng, cfg.obs_dim, cfg.embed_dim);
        let step_rnn = RnnParams::new(rng, cfg.embed_dim, cfg.hidden_dim);
        let position_rnn = RnnParams::new(rng, cfg.hidden_dim, cfg.hidden_dim);
        let embedding = glorot(rng, cfg.hidden_dim, cfg.model_dim);
        let blocks = (0..cfg.depth)
            .map(|_| TransformerBlockParams::new(rng, cfg.model_dim, cfg.heads, cfg.ff_dim))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { input, step_rnn, position_rnn, embedding, blocks, position: cfg.position })
    }

    pub fn depth(&self) -> usize {
        self.blocks.len()
    }

    pub fn model_dim(&self) -> usize {
        self.embedding.shape()[1]
    }

    pub fn obs_dim(&self) -> usize {
        self.input.input_dim()
    }

    /// Step-level encoding: projection, RNN chain, position codes and token
    /// embedding. `window` holds `K` step tensors `[B, obs]`, oldest first.
    /// Returns tokens `[B·K, d_s]` in sample-major order.
    pub fn step_tokens<B: Backend>(&self, b: &mut B, window: &[B::T]) -> Result<B::T> {
        let k = window.len();
        if k == 0 {
            return Err(Error::Invalid("empty observation window".into()));
        }
        let batch = b.value(&window[0]).shape()[0];
        let embedded = window.iter().map(|x| self.input.forward(b, x)).collect::<Result<Vec<_>>>()?;
        let hidden = self.step_rnn.run(b, &embedded)?;
        let summed = match self.position {
            PositionMode::Recursive => {
                let codes = self.position_rnn.position_encode(b, &hidden)?;
                hidden.iter().zip(&codes).map(|(h, p)| b.add(h, p)).collect::<Result<Vec<_>>>()?
            }
            PositionMode::Sinusoidal | PositionMode::None => hidden,
        };
        let emb = b.param(&self.embedding);
        let mut tokens = Vec::with_capacity(k);
        for (t, z) in summed.iter().enumerate() {
            let mut tok = b.matmul(z, &emb)?;
            if self.position == PositionMode::Sinusoidal {
                let pe = sinusoidal_pe(t as u64, self.model_dim())?;
                let rows = Tensor::from_fn(&[batch, self.model_dim()], |i| pe.data()[i % self.model_dim()]);
                let pe = b.constant(rows);
                tok = b.add(&tok, &pe)?;
            }
            tokens.push(tok);
        }
        let d = self.model_dim();
        let refs: Vec<&B::T> = tokens.iter().collect();
        let stacked = b.concat_rows(&refs)?;
        if batch == 1 {
            return Ok(stacked);
        }
        let cube = b.reshape(&stacked, &[k, batch, d])?;
        let cube = b.transpose01(&cube)?;
        b.reshape(&cube, &[batch * k, d])
    }

    /// `HT(x) = T_N ∘ … ∘ T_1(x)` over the step tokens, pooled at the last position.
    pub fn encode<B: Backend>(&self, b: &mut B, window: &[B::T]) -> Result<Encoded<B::T>> {
        let k = window.len();
        let mut x = self.step_tokens(b, window)?;
        for block in &self.blocks {
            x = block.forward(b, &x, k)?;
        }
        let batch = b.value(&x).shape()[0] / k;
        let last: Vec<usize> = (0..batch).map(|s| s * k + k - 1).collect();
        let pooled = b.select_rows(&x, &last)?;
        Ok(Encoded { sequence: x, pooled })
    }
}

impl Parameterized for EncoderStack {
    fn params(&self) -> Vec<&Param> {
        let mut v = self.input.params();
        v.extend(self.step_rnn.params());
        v.extend(self.position_rnn.params());
        v.push(&self.embedding);
        for blk in &self.blocks {
            v.extend(blk.params());
        }
        v
    }
    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut v = self.input.params_mut();
        v.extend(self.step_rnn.params_mut());
        v.extend(self.position_rnn.params_mut());
        v.push(&mut self.embedding);
        for blk in &mut self.blocks {
            v.extend(blk.params_mut());
        }
        v
    }
}

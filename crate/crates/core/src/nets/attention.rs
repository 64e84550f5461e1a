use rand::Rng;

use super::init::glorot;
use super::mlp::{Activation, MlpParams};
use crate::numcore::{Backend, Param, Parameterized, Tensor, LAYER_NORM_EPS};
use crate::{Error, Result};

/// One post-norm transformer encoder layer.
#[derive(Clone, Debug, PartialEq)]
pub struct TransformerBlockParams {
    /// Per-head projections, each `[d_s, d_h]`.
    pub query: Vec<Param>,
    pub key: Vec<Param>,
    pub value: Vec<Param>,
    /// `[heads·d_h, d_s]`.
    pub output: Param,
    pub norm1_gain: Param,
    pub norm1_bias: Param,
    pub norm2_gain: Param,
    pub norm2_bias: Param,
    /// `d_s → d_ff → d_s` with ReLU between.
    pub feed_forward: MlpParams,
}

/// Test-facing knobs for the attention computation.
#[derive(Clone, Copy, Debug, Default)]
pub struct AttentionHooks {
    /// Constant added to every scaled attention logit before the softmax.
    pub logit_offset: f64,
}

impl TransformerBlockParams {
    pub fn new<R: Rng + ?Sized>(rng: &mut R, model_dim: usize, heads: usize, ff_dim: usize) -> Result<Self> {
        if heads == 0 || !model_dim.is_multiple_of(heads) {
            return Err(Error::Invalid(format!("{heads} heads do not divide model width {model_dim}")));
        }
        let head_dim = model_dim / heads;
        let proj = |rng: &mut R| (0..heads).map(|_| glorot(rng, model_dim, head_dim)).collect::<Vec<_>>();
        let query = proj(rng);
        let key = proj(rng);
        let value = proj(rng);
        Ok(Self {
            query,
            key,
            value,
            output: glorot(rng, heads * head_dim, model_dim),
            norm1_gain: Param::new(Tensor::full(&[model_dim], 1.0)),
            norm1_bias: Param::new(Tensor::zeros(&[model_dim])),
            norm2_gain: Param::new(Tensor::full(&[model_dim], 1.0)),
            norm2_bias: Param::new(Tensor::zeros(&[model_dim])),
            feed_forward: MlpParams::build(rng, &[model_dim, ff_dim, model_dim], Activation::Relu, Activation::Identity),
        })
    }

    pub fn heads(&self) -> usize {
        self.query.len()
    }

    pub fn model_dim(&self) -> usize {
        self.output.shape()[1]
    }

    pub fn head_dim(&self) -> usize {
        self.query[0].shape()[1]
    }

    fn check_input(&self, x: &Tensor, seq_len: usize, op: &'static str) -> Result<usize> {
        let [rows, width] = *x.shape() else {
            return Err(Error::shape(op, format!("expected [B·K, d_s], got {:?}", x.shape())));
        };
        if width != self.model_dim() || seq_len == 0 || rows % seq_len != 0 {
            return Err(Error::shape(
                op,
                format!("input {:?} with seq_len {seq_len}, model width {}", x.shape(), self.model_dim()),
            ));
        }
        Ok(rows / seq_len)
    }

    /// Self-attention over the sequence axis of `x` (`[B·K, d_s]`, sample-major).
    pub fn multi_head_attention<B: Backend>(&self, b: &mut B, x: &B::T, seq_len: usize) -> Result<B::T> {
        self.attention_traced(b, x, seq_len, AttentionHooks::default(), None)
    }

    /// As [`Self::multi_head_attention`], also returning each head's
    /// `[B, K, K]` attention weights.
    pub fn attention_weights<B: Backend>(
        &self,
        b: &mut B,
        x: &B::T,
        seq_len: usize,
        hooks: AttentionHooks,
    ) -> Result<(B::T, Vec<Tensor>)> {
        let mut weights = Vec::new();
        let out = self.attention_traced(b, x, seq_len, hooks, Some(&mut weights))?;
        Ok((out, weights))
    }

    fn attention_traced<B: Backend>(
        &self,
        b: &mut B,
        x: &B::T,
        seq_len: usize,
        hooks: AttentionHooks,
        mut trace: Option<&mut Vec<Tensor>>,
    ) -> Result<B::T> {
        let batch = self.check_input(b.value(x), seq_len, "multi_head_attention")?;
        let dh = self.head_dim();
        let inv_scale = 1.0 / (self.model_dim() as f64).sqrt();
        let mut heads = Vec::with_capacity(self.heads());
        for h in 0..self.heads() {
            let wq = b.param(&self.query[h]);
            let wk = b.param(&self.key[h]);
            let wv = b.param(&self.value[h]);
            let q = b.matmul(x, &wq)?;
            let k = b.matmul(x, &wk)?;
            let v = b.matmul(x, &wv)?;
            let q = b.reshape(&q, &[batch, seq_len, dh])?;
            let k = b.reshape(&k, &[batch, seq_len, dh])?;
            let v = b.reshape(&v, &[batch, seq_len, dh])?;
            let logits = b.bmm(&q, &k, true)?;
            let mut logits = b.scale(&logits, inv_scale);
            if hooks.logit_offset != 0.0 {
                let shift = b.constant(Tensor::full(&[batch, seq_len, seq_len], hooks.logit_offset));
                logits = b.add(&logits, &shift)?;
            }
            let weights = b.softmax(&logits, 2)?;
            if let Some(t) = trace.as_deref_mut() {
                t.push(b.value(&weights).clone());
            }
            let out = b.bmm(&weights, &v, false)?;
            heads.push(b.reshape(&out, &[batch * seq_len, dh])?);
        }
        let refs: Vec<&B::T> = heads.iter().collect();
        let concat = if refs.len() == 1 { refs[0].clone() } else { b.concat_cols(&refs)? };
        let wo = b.param(&self.output);
        b.matmul(&concat, &wo)
    }

    /// `H = LN(D + MHA(D))`, `L = LN(H + FF(H))`.
    pub fn forward<B: Backend>(&self, b: &mut B, x: &B::T, seq_len: usize) -> Result<B::T> {
        self.forward_with(b, x, seq_len, AttentionHooks::default())
    }

    pub fn forward_with<B: Backend>(&self, b: &mut B, x: &B::T, seq_len: usize, hooks: AttentionHooks) -> Result<B::T> {
        let attn = self.attention_traced(b, x, seq_len, hooks, None)?;
        let res1 = b.add(x, &attn)?;
        let g1 = b.param(&self.norm1_gain);
        let b1 = b.param(&self.norm1_bias);
        let h = b.layer_norm(&res1, &g1, &b1, LAYER_NORM_EPS)?;
        let ff = self.feed_forward.forward(b, &h)?;
        let res2 = b.add(&h, &ff)?;
        let g2 = b.param(&self.norm2_gain);
        let b2 = b.param(&self.norm2_bias);
        b.layer_norm(&res2, &g2, &b2, LAYER_NORM_EPS)
    }
}

impl Parameterized for TransformerBlockParams {
    fn params(&self) -> Vec<&Param> {
        let mut v: Vec<&Param> = Vec::new();
        v.extend(self.query.iter());
        v.extend(self.key.iter());
        v.extend(self.value.iter());
        v.extend([&self.output, &self.norm1_gain, &self.norm1_bias, &self.norm2_gain, &self.norm2_bias]);
        v.extend(self.feed_forward.params());
        v
    }
    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut v: Vec<&mut Param> = Vec::new();
        v.extend(self.query.iter_mut());
        v.extend(self.key.iter_mut());
        v.extend(self.value.iter_mut());
        v.extend([
            &mut self.output,
            &mut self.norm1_gain,
            &mut self.norm1_bias,
            &mut self.norm2_gain,
            &mut self.norm2_bias,
        ]);
        v.extend(self.feed_forward.params_mut());
        v
    }
}

use rand::Rng;

use super::config::{Algorithm, LearnerConfig};
use crate::nets::{Activation, EncoderConfig, EncoderStack, MlpParams, RnnParams};
use crate::numcore::{Backend, Param, Parameterized};
use crate::{Error, Result};

/// How a critic summarizes each agent's observation window.
#[derive(Clone, Debug, PartialEq)]
pub enum HistoryEncoder {
    None,
    /// Final hidden state of a plain RNN.
    Rnn(Vec<RnnParams>),
    /// Pooled output of the hierarchical encoder.
    Stack(Vec<EncoderStack>),
}

impl HistoryEncoder {
    fn len(&self) -> usize {
        match self {
            HistoryEncoder::None => 0,
            HistoryEncoder::Rnn(v) => v.len(),
            HistoryEncoder::Stack(v) => v.len(),
        }
    }
}

/// Centralized critic `Q_i(x)` with `x = (history codes, s, a)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Critic {
    pub encoders: HistoryEncoder,
    pub mlp: MlpParams,
}

impl Critic {
    pub fn new<R: Rng + ?Sized>(rng: &mut R, obs_dims: &[usize], action_dims: &[usize], cfg: &LearnerConfig) -> Result<Self> {
        if cfg.share_encoder && obs_dims.iter().any(|&d| d != obs_dims[0]) {
            return Err(Error::Config("share_encoder needs equal observation widths".into()));
        }
        let count = if cfg.share_encoder { 1 } else { obs_dims.len() };
        let (encoders, code_width) = match cfg.algorithm {
            Algorithm::Maddpg => (HistoryEncoder::None, 0),
            Algorithm::Rmaddpg => {
                let v = (0..count).map(|i| RnnParams::new(rng, obs_dims[i], cfg.rnn_hidden)).collect();
                (HistoryEncoder::Rnn(v), cfg.rnn_hidden)
            }
            Algorithm::Hrtmaddpg => {
                let v = (0..count)
                    .map(|i| {
                        let ec = EncoderConfig {
                            obs_dim: obs_dims[i],
                            embed_dim: cfg.embed_dim,
                            hidden_dim: cfg.rnn_hidden,
                            model_dim: cfg.model_dim,
                            heads: cfg.heads,
                            ff_dim: cfg.ff_dim,
                            depth: cfg.depth,
                            position: cfg.position,
                        };
                        EncoderStack::new(rng, &ec)
                    })
                    .collect::<Result<Vec<_>>>()?;
                (HistoryEncoder::Stack(v), cfg.model_dim)
            }
        };
        let input = code_width * obs_dims.len() + obs_dims.iter().sum::<usize>() + action_dims.iter().sum::<usize>();
        let mlp = MlpParams::build(rng, &[input, cfg.mlp_hidden, cfg.mlp_hidden, 1], Activation::Relu, Activation::Identity);
        Ok(Self { encoders, mlp })
    }

    pub fn input_dim(&self) -> usize {
        self.mlp.input_dim()
    }

    /// One history code `[B, width]` per agent window; empty for MADDPG.
    pub fn history<B: Backend>(&self, b: &mut B, windows: &[Vec<B::T>]) -> Result<Vec<B::T>> {
        let pick = |i: usize| if self.encoders.len() == 1 { 0 } else { i };
        if self.encoders.len() > 1 && self.encoders.len() != windows.len() {
            return Err(Error::shape("critic_history", format!("{} windows for {} encoders", windows.len(), self.encoders.len())));
        }
        let mut out = Vec::with_capacity(windows.len());
        for (i, w) in windows.iter().enumerate() {
            match &self.encoders {
                HistoryEncoder::None => return Ok(Vec::new()),
                HistoryEncoder::Rnn(v) => {
                    let states = v[pick(i)].run(b, w)?;
                    out.push(states.last().expect("non-empty window").clone());
                }
                HistoryEncoder::Stack(v) => out.push(v[pick(i)].encode(b, w)?.pooled),
            }
        }
        Ok(out)
    }

    /// Concatenates history codes, joint observations and joint actions.
    pub fn input<B: Backend>(&self, b: &mut B, codes: &[B::T], obs: &[B::T], actions: &[B::T]) -> Result<B::T> {
        let parts: Vec<&B::T> = codes.iter().chain(obs).chain(actions).collect();
        let x = b.concat_cols(&parts)?;
        if b.value(&x).cols() != self.input_dim() {
            return Err(Error::shape("critic_input", format!("width {} but critic expects {}", b.value(&x).cols(), self.input_dim())));
        }
        Ok(x)
    }

    /// `[B, 1]` action values.
    pub fn q<B: Backend>(&self, b: &mut B, x: &B::T) -> Result<B::T> {
        self.mlp.forward(b, x)
    }
}

impl Parameterized for Critic {
    fn params(&self) -> Vec<&Param> {
        let mut v: Vec<&Param> = match &self.encoders {
            HistoryEncoder::None => Vec::new(),
            HistoryEncoder::Rnn(e) => e.iter().flat_map(|r| r.params()).collect(),
            HistoryEncoder::Stack(e) => e.iter().flat_map(|s| s.params()).collect(),
        };
        v.extend(self.mlp.params());
        v
    }
    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut v: Vec<&mut Param> = match &mut self.encoders {
            HistoryEncoder::None => Vec::new(),
            HistoryEncoder::Rnn(e) => e.iter_mut().flat_map(|r| r.params_mut()).collect(),
            HistoryEncoder::Stack(e) => e.iter_mut().flat_map(|s| s.params_mut()).collect(),
        };
        v.extend(self.mlp.params_mut());
        v
    }
}

use rand::Rng;

use super::config::LearnerConfig;
use crate::envs::ActionSpec;
use crate::nets::{Activation, MlpParams, RnnParams};
use crate::numcore::{Backend, Param, Parameterized};
use crate::{Error, Result};

/// Decentralized policy `μ_i(o_i, h_i)`.
///
/// The MLP emits raw outputs; movement columns pass through tanh and the
/// message columns through a softmax.
#[derive(Clone, Debug, PartialEq)]
pub struct Actor {
    /// RNN over the agent's own window; its final state joins the observation.
    pub history: Option<RnnParams>,
    pub mlp: MlpParams,
    pub spec: ActionSpec,
}

impl Actor {
    pub fn new<R: Rng + ?Sized>(rng: &mut R, obs_dim: usize, spec: ActionSpec, cfg: &LearnerConfig) -> Self {
        let history = (cfg.algorithm.is_recurrent() && cfg.actor_history).then(|| RnnParams::new(rng, obs_dim, cfg.rnn_hidden));
        let input = obs_dim + history.as_ref().map_or(0, RnnParams::hidden_dim);
        let mlp = MlpParams::build(rng, &[input, cfg.mlp_hidden, cfg.mlp_hidden, spec.dim()], Activation::Relu, Activation::Identity);
        Self { history, mlp, spec }
    }

    pub fn obs_dim(&self) -> usize {
        self.mlp.input_dim() - self.history.as_ref().map_or(0, RnnParams::hidden_dim)
    }

    /// Raw pre-activation outputs `[B, action_dim]`.
    pub fn logits<B: Backend>(&self, b: &mut B, obs: &B::T, window: &[B::T]) -> Result<B::T> {
        if b.value(obs).cols() != self.obs_dim() {
            return Err(Error::shape("actor", format!("observation width {} but actor expects {}", b.value(obs).cols(), self.obs_dim())));
        }
        let input = match &self.history {
            Some(rnn) => {
                let states = rnn.run(b, window)?;
                b.concat_cols(&[obs, states.last().expect("non-empty window")])?
            }
            None => obs.clone(),
        };
        self.mlp.forward(b, &input)
    }

    /// Applies the action head to raw outputs.
    pub fn head<B: Backend>(&self, b: &mut B, logits: &B::T) -> Result<B::T> {
        let spec = self.spec;
        match (spec.movement, spec.comm_dim) {
            (true, 0) => Ok(b.tanh(logits)),
            (false, _) => b.softmax(logits, 1),
            (true, c) => {
                let m = b.slice_cols(logits, 0, 2)?;
                let m = b.tanh(&m);
                let msg = b.slice_cols(logits, 2, c)?;
                let msg = b.softmax(&msg, 1)?;
                b.concat_cols(&[&m, &msg])
            }
        }
    }

    pub fn act<B: Backend>(&self, b: &mut B, obs: &B::T, window: &[B::T]) -> Result<B::T> {
        let z = self.logits(b, obs, window)?;
        self.head(b, &z)
    }
}

impl Parameterized for Actor {
    fn params(&self) -> Vec<&Param> {
        let mut v = self.history.as_ref().map_or_else(Vec::new, |r| r.params());
        v.extend(self.mlp.params());
        v
    }
    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut v = self.history.as_mut().map_or_else(Vec::new, |r| r.params_mut());
        v.extend(self.mlp.params_mut());
        v
    }
}

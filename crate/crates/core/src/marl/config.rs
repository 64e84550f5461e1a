use std::fmt;
use std::str::FromStr;

use crate::nets::PositionMode;
use crate::{Error, Result};

/// The three learners.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// Feed-forward actors, critic over joint observations and actions.
    Maddpg,
    /// Critic additionally sees each agent's RNN-encoded observation history.
    Rmaddpg,
    /// Critic history passes through an RNN step encoder and stacked transformer blocks.
    Hrtmaddpg,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Maddpg, Algorithm::Rmaddpg, Algorithm::Hrtmaddpg];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Maddpg => "maddpg",
            Algorithm::Rmaddpg => "rmaddpg",
            Algorithm::Hrtmaddpg => "hrtmaddpg",
        }
    }

    /// Whether actors condition on their observation window.
    pub fn is_recurrent(self) -> bool {
        self != Algorithm::Maddpg
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm `{s}` (expected maddpg, rmaddpg or hrtmaddpg)")))
    }
}

/// Hyperparameters of one learner set. Defaults follow the MADDPG benchmark
/// lineage; the harness may scale widths down.
#[derive(Clone, Debug, PartialEq)]
pub struct LearnerConfig {
    pub algorithm: Algorithm,
    /// Number of stacked transformer blocks; 0 unless `Hrtmaddpg`.
    pub depth: usize,
    /// Observation window length `K`.
    pub window: usize,
    pub gamma: f64,
    pub tau: f64,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Environment steps between update rounds.
    pub learn_every: usize,
    /// Hidden width of actor and critic MLPs.
    pub mlp_hidden: usize,
    pub rnn_hidden: usize,
    /// Width of the per-step observation projection inside the encoder.
    pub embed_dim: usize,
    pub model_dim: usize,
    pub heads: usize,
    pub ff_dim: usize,
    pub position: PositionMode,
    /// One history encoder per critic, shared across the agents it encodes.
    pub share_encoder: bool,
    /// Give recurrent actors their own RNN over the observation window.
    pub actor_history: bool,
    /// Global gradient-norm clip; 0 disables.
    pub grad_clip: f64,
    /// Weight of the mean squared pre-activation penalty on actor outputs.
    pub actor_reg: f64,
    pub noise_start: f64,
    pub noise_end: f64,
    pub gumbel_temperature: f64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Hrtmaddpg,
            depth: 2,
            window: 8,
            gamma: 0.95,
            tau: 0.01,
            lr_actor: 1e-2,
            lr_critic: 1e-2,
            batch_size: 1024,
            buffer_capacity: 1_000_000,
            learn_every: 100,
            mlp_hidden: 64,
            rnn_hidden: 64,
            embed_dim: 64,
            model_dim: 64,
            heads: 4,
            ff_dim: 64,
            position: PositionMode::Recursive,
            share_encoder: false,
            actor_history: true,
            grad_clip: 0.5,
            actor_reg: 1e-3,
            noise_start: 0.1,
            noise_end: 0.01,
            gumbel_temperature: 1.0,
        }
    }
}

impl LearnerConfig {
    pub fn for_algorithm(algorithm: Algorithm) -> Self {
        Self { algorithm, depth: if algorithm == Algorithm::Hrtmaddpg { 2 } else { 0 }, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        match self.algorithm {
            Algorithm::Hrtmaddpg if !(1..=5).contains(&self.depth) => {
                return bad(format!("depth must be in 1..=5 for hrtmaddpg, got {}", self.depth))
            }
            Algorithm::Maddpg | Algorithm::Rmaddpg if self.depth != 0 => {
                return bad(format!("depth {} requires algorithm hrtmaddpg", self.depth))
            }
            _ => {}
        }
        if self.window == 0 {
            return bad("window must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad(format!("gamma {} outside [0, 1]", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return bad(format!("tau {} outside [0, 1]", self.tau));
        }
        if self.batch_size == 0 || self.buffer_capacity == 0 || self.learn_every == 0 {
            return bad("batch_size, buffer_capacity and learn_every must be positive".into());
        }
        if self.batch_size > self.buffer_capacity {
            return bad("batch_size exceeds buffer_capacity".into());
        }
        let widths = [self.mlp_hidden, self.rnn_hidden, self.embed_dim, self.model_dim, self.ff_dim, self.heads];
        if widths.contains(&0) {
            return bad("network widths must be positive".into());
        }
        if self.algorithm == Algorithm::Hrtmaddpg && !self.model_dim.is_multiple_of(self.heads) {
            return bad(format!("{} heads do not divide model_dim {}", self.heads, self.model_dim));
        }
        for (name, v) in [("lr_actor", self.lr_actor), ("lr_critic", self.lr_critic)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive"));
            }
        }
        for (name, v) in [("grad_clip", self.grad_clip), ("actor_reg", self.actor_reg), ("noise_start", self.noise_start), ("noise_end", self.noise_end)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be non-negative"));
            }
        }
        if !(self.gumbel_temperature > 0.0) {
            return bad("gumbel_temperature must be positive".into());
        }
        Ok(())
    }
}

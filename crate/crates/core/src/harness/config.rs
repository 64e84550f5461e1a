//! Flat `key = value` experiment configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Every key below may
//! appear at most once per file; unknown keys are errors.
//!
//! | key | default |
//! |---|---|
//! | `scenario` | `coop_nav` |
//! | `algorithm` | `hrtmaddpg` |
//! | `depth` | 2 for hrtmaddpg, else 0 |
//! | `episode_len` | 25 |
//! | `train_episodes` | 2000 |
//! | `eval_episodes` | 200 |
//! | `seed` | 0 |
//! | `out_dir` | `runs/default` |
//! | `checkpoint_every` | 500 |
//! | `nav_reward` | `min` (`min` or `assigned`) |
//! | learner keys | see [`LearnerConfig`] field names |

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::envs::{EnvOptions, NavReward, Scenario};
use crate::marl::{Algorithm, LearnerConfig};
use crate::nets::PositionMode;
use crate::{Error, Result};

/// Everything needed to reproduce one run.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    /// Explicit depth; `None` picks the algorithm's default.
    pub depth: Option<usize>,
    pub learner: LearnerConfig,
    pub episode_len: usize,
    pub train_episodes: usize,
    pub eval_episodes: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub checkpoint_every: usize,
    pub nav_reward: NavReward,
}

/// Desk-scale learner defaults used by the harness.
pub fn desk_learner(algorithm: Algorithm) -> LearnerConfig {
    LearnerConfig {
        batch_size: 256,
        buffer_capacity: 1_000_000,
        learn_every: 100,
        mlp_hidden: 64,
        rnn_hidden: 32,
        embed_dim: 32,
        model_dim: 32,
        heads: 4,
        ff_dim: 32,
        ..LearnerConfig::for_algorithm(algorithm)
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::CoopNav,
            depth: None,
            learner: desk_learner(Algorithm::Hrtmaddpg),
            episode_len: 25,
            train_episodes: 2000,
            eval_episodes: 200,
            seed: 0,
            out_dir: PathBuf::from("runs/default"),
            checkpoint_every: 500,
            nav_reward: NavReward::MinOverAgents,
        }
    }
}

pub const CONFIG_KEYS: &[&str] = &[
    "scenario",
    "algorithm",
    "depth",
    "episode_len",
    "train_episodes",
    "eval_episodes",
    "seed",
    "out_dir",
    "checkpoint_every",
    "nav_reward",
    "window",
    "gamma",
    "tau",
    "lr_actor",
    "lr_critic",
    "batch_size",
    "buffer_capacity",
    "learn_every",
    "mlp_hidden",
    "rnn_hidden",
    "embed_dim",
    "model_dim",
    "heads",
    "ff_dim",
    "position",
    "share_encoder",
    "actor_history",
    "grad_clip",
    "actor_reg",
    "noise_start",
    "noise_end",
    "gumbel_temperature",
];

/// Keys that determine parameter shapes; hashed into checkpoints.
const MODEL_KEYS: &[&str] = &[
    "scenario",
    "algorithm",
    "depth",
    "window",
    "mlp_hidden",
    "rnn_hidden",
    "embed_dim",
    "model_dim",
    "heads",
    "ff_dim",
    "position",
    "share_encoder",
    "actor_history",
];

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("invalid value `{v}` for `{key}`")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("invalid boolean `{v}` for `{key}`"))),
    }
}

impl ExperimentConfig {
    pub fn algorithm(&self) -> Algorithm {
        self.learner.algorithm
    }

    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let l = &mut self.learner;
        match key.trim() {
            "scenario" => self.scenario = v.parse()?,
            "algorithm" => {
                let a: Algorithm = v.parse()?;
                *l = LearnerConfig { algorithm: a, ..l.clone() };
            }
            "depth" => self.depth = Some(parse(key, v)?),
            "episode_len" => self.episode_len = parse(key, v)?,
            "train_episodes" => self.train_episodes = parse(key, v)?,
            "eval_episodes" => self.eval_episodes = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "out_dir" => self.out_dir = PathBuf::from(v),
            "checkpoint_every" => self.checkpoint_every = parse(key, v)?,
            "nav_reward" => {
                self.nav_reward = match v {
                    "min" => NavReward::MinOverAgents,
                    "assigned" => NavReward::Assigned,
                    _ => return Err(Error::Config(format!("invalid nav_reward `{v}` (min or assigned)"))),
                }
            }
            "window" => l.window = parse(key, v)?,
            "gamma" => l.gamma = parse(key, v)?,
            "tau" => l.tau = parse(key, v)?,
            "lr_actor" => l.lr_actor = parse(key, v)?,
            "lr_critic" => l.lr_critic = parse(key, v)?,
            "batch_size" => l.batch_size = parse(key, v)?,
            "buffer_capacity" => l.buffer_capacity = parse(key, v)?,
            "learn_every" => l.learn_every = parse(key, v)?,
            "mlp_hidden" => l.mlp_hidden = parse(key, v)?,
            "rnn_hidden" => l.rnn_hidden = parse(key, v)?,
            "embed_dim" => l.embed_dim = parse(key, v)?,
            "model_dim" => l.model_dim = parse(key, v)?,
            "heads" => l.heads = parse(key, v)?,
            "ff_dim" => l.ff_dim = parse(key, v)?,
            "position" => l.position = PositionMode::parse(v)?,
            "share_encoder" => l.share_encoder = parse_bool(key, v)?,
            "actor_history" => l.actor_history = parse_bool(key, v)?,
            "grad_clip" => l.grad_clip = parse(key, v)?,
            "actor_reg" => l.actor_reg = parse(key, v)?,
            "noise_start" => l.noise_start = parse(key, v)?,
            "noise_end" => l.noise_end = parse(key, v)?,
            "gumbel_temperature" => l.gumbel_temperature = parse(key, v)?,
            other => return Err(Error::Config(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            let k = k.trim();
            if !seen.insert(k.to_string()) {
                return Err(Error::Config(format!("line {}: duplicate key `{k}`", n + 1)));
            }
            self.set(k, v).map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = Self::default();
        c.apply_text(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    /// Resolved depth: explicit value, or 2 for hrtmaddpg and 0 otherwise.
    pub fn resolved_depth(&self) -> usize {
        self.depth.unwrap_or(if self.algorithm() == Algorithm::Hrtmaddpg { 2 } else { 0 })
    }

    pub fn learner_config(&self) -> LearnerConfig {
        LearnerConfig { depth: self.resolved_depth(), ..self.learner.clone() }
    }

    pub fn env_options(&self) -> EnvOptions {
        EnvOptions { episode_len: self.episode_len, nav_reward: self.nav_reward }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(d) = self.depth {
            if d != 0 && self.algorithm() != Algorithm::Hrtmaddpg {
                return Err(Error::Config(format!("depth {d} requires algorithm hrtmaddpg")));
            }
        }
        if self.episode_len == 0 {
            return Err(Error::Config("episode_len must be at least 1".into()));
        }
        if self.checkpoint_every == 0 {
            return Err(Error::Config("checkpoint_every must be at least 1".into()));
        }
        self.learner_config().validate()
    }

    fn value_of(&self, key: &str) -> String {
        let l = self.learner_config();
        match key {
            "scenario" => self.scenario.as_str().into(),
            "algorithm" => l.algorithm.as_str().into(),
            "depth" => l.depth.to_string(),
            "episode_len" => self.episode_len.to_string(),
            "train_episodes" => self.train_episodes.to_string(),
            "eval_episodes" => self.eval_episodes.to_string(),
            "seed" => self.seed.to_string(),
            "out_dir" => self.out_dir.display().to_string(),
            "checkpoint_every" => self.checkpoint_every.to_string(),
            "nav_reward" => match self.nav_reward {
                NavReward::MinOverAgents => "min".into(),
                NavReward::Assigned => "assigned".into(),
            },
            "window" => l.window.to_string(),
            "gamma" => format!("{:?}", l.gamma),
            "tau" => format!("{:?}", l.tau),
            "lr_actor" => format!("{:?}", l.lr_actor),
            "lr_critic" => format!("{:?}", l.lr_critic),
            "batch_size" => l.batch_size.to_string(),
            "buffer_capacity" => l.buffer_capacity.to_string(),
            "learn_every" => l.learn_every.to_string(),
            "mlp_hidden" => l.mlp_hidden.to_string(),
            "rnn_hidden" => l.rnn_hidden.to_string(),
            "embed_dim" => l.embed_dim.to_string(),
            "model_dim" => l.model_dim.to_string(),
            "heads" => l.heads.to_string(),
            "ff_dim" => l.ff_dim.to_string(),
            "position" => l.position.as_str().into(),
            "share_encoder" => l.share_encoder.to_string(),
            "actor_history" => l.actor_history.to_string(),
            "grad_clip" => format!("{:?}", l.grad_clip),
            "actor_reg" => format!("{:?}", l.actor_reg),
            "noise_start" => format!("{:?}", l.noise_start),
            "noise_end" => format!("{:?}", l.noise_end),
            "gumbel_temperature" => format!("{:?}", l.gumbel_temperature),
            _ => unreachable!("documented key {key}"),
        }
    }

    /// Canonical text: every key once, in documented order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for k in CONFIG_KEYS {
            let _ = writeln!(s, "{k} = {}", self.value_of(k));
        }
        s
    }

    /// SHA-256 over the shape-determining keys.
    pub fn model_hash(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        for k in MODEL_KEYS {
            h.update(format!("{k} = {}\n", self.value_of(k)).as_bytes());
        }
        h.finalize().into()
    }
}

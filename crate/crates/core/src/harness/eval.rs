use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ExperimentConfig;
use super::metrics::{fmt_f64, mean};
use super::rng::{stream, Stream};
use super::train::build_learners;
use crate::envs::{observe_all, scenario_init_with, world_step, ActionSpec, AgentAction};
use crate::marl::{Checkpoint, LearnerSet, ObservationWindow};
use crate::{Error, Result};

pub const EVAL_CSV: &str = "eval_returns.csv";
pub const EVAL_JSON: &str = "eval_report.json";
pub const RANDOM_EVAL_CSV: &str = "eval_random_returns.csv";
pub const RANDOM_EVAL_JSON: &str = "eval_random_report.json";

/// Label used for the uniform-random baseline policy.
pub const RANDOM_POLICY: &str = "random";

/// Noise-free evaluation summary.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub scenario: String,
    /// Algorithm name, or `random` for the baseline.
    pub policy: String,
    pub seed: u64,
    /// `[episode][agent]` returns.
    pub returns: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    /// Sample standard deviation (n − 1); 0 for a single episode.
    pub std: Vec<f64>,
    pub team_mean: f64,
    pub team_std: f64,
}

fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

impl EvalReport {
    pub fn from_returns(scenario: &str, policy: &str, seed: u64, returns: Vec<Vec<f64>>) -> Self {
        let n = returns.first().map_or(0, Vec::len);
        let col = |i: usize| returns.iter().map(|r| r[i]).collect::<Vec<f64>>();
        let team: Vec<f64> = returns.iter().map(|r| mean(r)).collect();
        Self {
            scenario: scenario.into(),
            policy: policy.into(),
            seed,
            mean: (0..n).map(|i| mean(&col(i))).collect(),
            std: (0..n).map(|i| sample_std(&col(i))).collect(),
            team_mean: mean(&team),
            team_std: sample_std(&team),
            returns,
        }
    }

    pub fn episodes(&self) -> usize {
        self.returns.len()
    }

    /// `episode, agent0 … agent{n−1}, team_mean`.
    pub fn to_csv(&self) -> String {
        let n = self.mean.len();
        let mut s = String::from("episode");
        for i in 0..n {
            let _ = write!(s, ",agent{i}");
        }
        s.push_str(",team_mean\n");
        for (e, r) in self.returns.iter().enumerate() {
            let _ = write!(s, "{}", e + 1);
            for v in r {
                let _ = write!(s, ",{}", fmt_f64(*v));
            }
            let _ = writeln!(s, ",{}", fmt_f64(mean(r)));
        }
        s
    }

    pub fn to_json(&self) -> String {
        let list = |xs: &[f64]| xs.iter().map(|&v| fmt_f64(v)).collect::<Vec<_>>().join(", ");
        format!(
            "{{\n  \"scenario\": \"{}\",\n  \"policy\": \"{}\",\n  \"seed\": {},\n  \"episodes\": {},\n  \"mean\": [{}],\n  \"std\": [{}],\n  \"team_mean\": {},\n  \"team_std\": {}\n}}\n",
            self.scenario,
            self.policy,
            self.seed,
            self.episodes(),
            list(&self.mean),
            list(&self.std),
            fmt_f64(self.team_mean),
            fmt_f64(self.team_std)
        )
    }

    /// Reads the summary fields of a JSON report (per-episode returns are
    /// not stored there and come back empty).
    pub fn parse_json(text: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let s = |k: &str| v[k].as_str().map(str::to_string).ok_or_else(|| Error::Parse(format!("missing `{k}`")));
        let f = |k: &str| v[k].as_f64().ok_or_else(|| Error::Parse(format!("missing `{k}`")));
        let list = |k: &str| -> Result<Vec<f64>> {
            v[k].as_array()
                .ok_or_else(|| Error::Parse(format!("missing `{k}`")))?
                .iter()
                .map(|x| x.as_f64().ok_or_else(|| Error::Parse(format!("non-numeric `{k}`"))))
                .collect()
        };
        Ok(Self {
            scenario: s("scenario")?,
            policy: s("policy")?,
            seed: v["seed"].as_u64().ok_or_else(|| Error::Parse("missing `seed`".into()))?,
            returns: Vec::new(),
            mean: list("mean")?,
            std: list("std")?,
            team_mean: f("team_mean")?,
            team_std: f("team_std")?,
        })
    }

    /// Writes the CSV and JSON forms into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let (csv, json) = if self.policy == RANDOM_POLICY { (RANDOM_EVAL_CSV, RANDOM_EVAL_JSON) } else { (EVAL_CSV, EVAL_JSON) };
        for (name, text) in [(csv, self.to_csv()), (json, self.to_json())] {
            let p = dir.join(name);
            fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        }
        Ok(())
    }
}

fn random_action<R: Rng + ?Sized>(rng: &mut R, spec: ActionSpec) -> AgentAction {
    let force = if spec.movement { [rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)] } else { [0.0; 2] };
    let raw: Vec<f64> = (0..spec.comm_dim).map(|_| rng.random_range(f64::MIN_POSITIVE..1.0)).collect();
    let total: f64 = raw.iter().sum();
    AgentAction { force, comm: raw.into_iter().map(|v| v / total).collect() }
}

/// Plays one episode and returns per-agent undiscounted returns. With no
/// learners the uniform-random policy acts, drawing from `rng`.
fn play_episode(cfg: &ExperimentConfig, env_seed: u64, learners: Option<&LearnerSet>, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let mut state = scenario_init_with(cfg.scenario, env_seed, cfg.env_options())?;
    let specs = state.action_specs();
    let n = state.num_agents;
    let dims = state.obs_dims();
    let window = learners.map_or(1, |l| l.cfg.window);
    let mut obs = observe_all(&state);
    let mut windows: Vec<ObservationWindow> = dims.iter().map(|&d| ObservationWindow::new(window, d)).collect();
    let mut returns = vec![0.0; n];
    loop {
        for (w, o) in windows.iter_mut().zip(&obs) {
            w.push(o)?;
        }
        let joint = match learners {
            Some(l) => (0..n)
                .map(|i| {
                    let a = l.select_action(i, &obs[i], &windows[i].materialize(), false, 0.0, rng)?;
                    AgentAction::from_flat(specs[i], &a)
                })
                .collect::<Result<Vec<_>>>()?,
            None => specs.iter().map(|&s| random_action(rng, s)).collect(),
        };
        let res = world_step(&state, &joint)?;
        for (acc, r) in returns.iter_mut().zip(&res.rewards) {
            *acc += r;
        }
        obs = res.observations;
        state = res.state;
        if res.done {
            return Ok(returns);
        }
    }
}

/// Evaluates the policy in `checkpoint` (or the uniform-random policy when
/// `None`) for `cfg.eval_episodes` noise-free episodes. Episodes run in
/// parallel; every episode has its own seed, so the report does not depend
/// on scheduling.
pub fn run_evaluation(cfg: &ExperimentConfig, checkpoint: Option<&Path>) -> Result<EvalReport> {
    let learners = match checkpoint {
        Some(path) => {
            if !path.exists() {
                return Err(Error::Checkpoint(format!("checkpoint not found: {}", path.display())));
            }
            let (mut set, _) = build_learners(cfg)?;
            Checkpoint::load(path)?.restore(&mut set, cfg.model_hash(), false)?;
            Some(set)
        }
        None => {
            cfg.validate()?;
            None
        }
    };
    evaluate_learners(cfg, learners.as_ref())
}

/// Evaluates in-memory learners (or the random policy).
pub fn evaluate_learners(cfg: &ExperimentConfig, learners: Option<&LearnerSet>) -> Result<EvalReport> {
    let mut seeds = stream(cfg.seed, Stream::Eval);
    let episode_seeds: Vec<(u64, u64)> = (0..cfg.eval_episodes).map(|_| (seeds.next_u64(), seeds.next_u64())).collect();
    let returns = crate::par::map_range(episode_seeds.len(), |e| {
        let (env_seed, policy_seed) = episode_seeds[e];
        play_episode(cfg, env_seed, learners, &mut ChaCha8Rng::seed_from_u64(policy_seed))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let policy = if learners.is_some() { cfg.algorithm().as_str() } else { RANDOM_POLICY };
    Ok(EvalReport::from_returns(cfg.scenario.as_str(), policy, cfg.seed, returns))
}

use rand::Rng;

use super::actor::Actor;
use super::config::LearnerConfig;
use super::critic::Critic;
use super::noise::{gaussian, gumbel, softmax};
use super::replay::{Transition, TransitionShape};
use crate::envs::ActionSpec;
use crate::numcore::{clip_grad_norm, Adam, Backend, Eager, Param, Parameterized, Tape, Tensor};
use crate::{Error, Result};

/// A sampled mini-batch laid out as per-agent tensors.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub size: usize,
    /// `[B, o_i]` per agent.
    pub obs: Vec<Tensor>,
    /// `K` tensors `[B, o_i]` per agent, oldest first.
    pub windows: Vec<Vec<Tensor>>,
    /// `[B, a_i]` per agent.
    pub actions: Vec<Tensor>,
    /// `[B, 1]` per agent.
    pub rewards: Vec<Tensor>,
    pub next_obs: Vec<Tensor>,
    pub next_windows: Vec<Vec<Tensor>>,
}

impl Batch {
    pub fn from_transitions(ts: &[&Transition]) -> Result<Self> {
        let first = ts.first().ok_or_else(|| Error::Invalid("empty batch".into()))?;
        let n = first.obs.len();
        let size = ts.len();
        let stack = |rows: &dyn Fn(&Transition) -> &[f64]| -> Result<Tensor> {
            let width = rows(first).len();
            let mut data = Vec::with_capacity(size * width);
            for t in ts {
                let r = rows(t);
                if r.len() != width {
                    return Err(Error::shape("batch", format!("row width {} vs {width}", r.len())));
                }
                data.extend_from_slice(r);
            }
            Tensor::new(&[size, width], data)
        };
        let k = first.window.first().map_or(0, Vec::len);
        let mut b = Batch {
            size,
            obs: Vec::with_capacity(n),
            windows: Vec::with_capacity(n),
            actions: Vec::with_capacity(n),
            rewards: Vec::with_capacity(n),
            next_obs: Vec::with_capacity(n),
            next_windows: Vec::with_capacity(n),
        };
        for i in 0..n {
            b.obs.push(stack(&|t| &t.obs[i])?);
            b.actions.push(stack(&|t| &t.actions[i])?);
            b.rewards.push(Tensor::new(&[size, 1], ts.iter().map(|t| t.rewards[i]).collect())?);
            b.next_obs.push(stack(&|t| &t.next_obs[i])?);
            b.windows.push((0..k).map(|s| stack(&|t| &t.window[i][s])).collect::<Result<_>>()?);
            b.next_windows.push((0..k).map(|s| stack(&|t| &t.next_window[i][s])).collect::<Result<_>>()?);
        }
        Ok(b)
    }

    pub fn num_agents(&self) -> usize {
        self.obs.len()
    }
}

fn lift<B: Backend>(b: &mut B, ts: &[Tensor]) -> Vec<B::T> {
    ts.iter().map(|t| b.constant(t.clone())).collect()
}

fn lift_windows<B: Backend>(b: &mut B, ws: &[Vec<Tensor>]) -> Vec<Vec<B::T>> {
    ws.iter().map(|w| lift(b, w)).collect()
}

/// `mean((y − Q(x))²)` over the batch, with `x` built from the stored
/// windows, observations and actions.
pub fn critic_loss<B: Backend>(critic: &Critic, b: &mut B, batch: &Batch, y: &Tensor) -> Result<B::T> {
    let windows = lift_windows(b, &batch.windows);
    let codes = critic.history(b, &windows)?;
    let obs = lift(b, &batch.obs);
    let acts = lift(b, &batch.actions);
    let x = critic.input(b, &codes, &obs, &acts)?;
    let q = critic.q(b, &x)?;
    let y = b.constant(y.clone());
    let diff = b.sub(&q, &y)?;
    let sq = b.mul(&diff, &diff)?;
    Ok(b.mean_all(&sq))
}

/// Per-agent state of one learner: online and target networks and their
/// optimizers.
#[derive(Clone, Debug)]
pub struct AgentLearner {
    pub actor: Actor,
    pub critic: Critic,
    pub target_actor: Actor,
    pub target_critic: Critic,
    pub actor_opt: Adam,
    pub critic_opt: Adam,
}

impl AgentLearner {
    fn new(actor: Actor, critic: Critic, cfg: &LearnerConfig) -> Self {
        let actor_opt = Adam::for_params(&actor.params(), cfg.lr_actor);
        let critic_opt = Adam::for_params(&critic.params(), cfg.lr_critic);
        Self { target_actor: actor.clone(), target_critic: critic.clone(), actor, critic, actor_opt, critic_opt }
    }
}

/// Losses reported by one update round.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct UpdateStats {
    pub critic_loss: Vec<f64>,
    pub actor_objective: Vec<f64>,
}

/// All agents of one training job.
#[derive(Clone, Debug)]
pub struct LearnerSet {
    pub cfg: LearnerConfig,
    pub specs: Vec<ActionSpec>,
    pub obs_dims: Vec<usize>,
    pub agents: Vec<AgentLearner>,
}

impl LearnerSet {
    pub fn new<R: Rng + ?Sized>(rng: &mut R, cfg: LearnerConfig, obs_dims: &[usize], specs: &[ActionSpec]) -> Result<Self> {
        cfg.validate()?;
        if obs_dims.len() != specs.len() || obs_dims.is_empty() {
            return Err(Error::Config("need one observation width and action spec per agent".into()));
        }
        let action_dims: Vec<usize> = specs.iter().map(ActionSpec::dim).collect();
        let mut agents = Vec::with_capacity(specs.len());
        for (i, &spec) in specs.iter().enumerate() {
            let actor = Actor::new(rng, obs_dims[i], spec, &cfg);
            let critic = Critic::new(rng, obs_dims, &action_dims, &cfg)?;
            agents.push(AgentLearner::new(actor, critic, &cfg));
        }
        Ok(Self { cfg, specs: specs.to_vec(), obs_dims: obs_dims.to_vec(), agents })
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn transition_shape(&self) -> TransitionShape {
        TransitionShape {
            obs_dims: self.obs_dims.clone(),
            action_dims: self.specs.iter().map(ActionSpec::dim).collect(),
            window: self.cfg.window,
        }
    }

    /// `μ_i(o, h)`, plus Gaussian movement noise of scale `sigma` and a
    /// Gumbel-perturbed message when `explore` is set. Clamped to bounds.
    pub fn select_action<R: Rng + ?Sized>(
        &self,
        agent: usize,
        obs: &[f64],
        window: &[Vec<f64>],
        explore: bool,
        sigma: f64,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        let a = self.agents.get(agent).ok_or_else(|| Error::Invalid(format!("no agent {agent}")))?;
        let d = self.obs_dims[agent];
        if obs.len() != d || window.len() != self.cfg.window || window.iter().any(|r| r.len() != d) {
            return Err(Error::shape("select_action", format!("agent {agent} expects width {d} and window {}", self.cfg.window)));
        }
        let mut b = Eager;
        let o = Tensor::new(&[1, d], obs.to_vec())?;
        let w: Vec<Tensor> = window.iter().map(|r| Tensor::new(&[1, d], r.clone())).collect::<Result<_>>()?;
        let z = a.actor.logits(&mut b, &o, &w)?.into_data();
        let spec = self.specs[agent];
        let (mv, msg) = z.split_at(if spec.movement { 2 } else { 0 });
        let mut out: Vec<f64> = mv
            .iter()
            .map(|&v| {
                let noisy = v.tanh() + if explore { gaussian(rng, sigma) } else { 0.0 };
                noisy.clamp(-1.0, 1.0)
            })
            .collect();
        if !msg.is_empty() {
            if explore {
                let perturbed: Vec<f64> = msg.iter().map(|&l| l + gumbel(rng)).collect();
                out.extend(softmax(&perturbed, self.cfg.gumbel_temperature));
            } else {
                out.extend(softmax(msg, 1.0));
            }
        }
        Ok(out)
    }

    /// Target-policy actions `μ′_k(s′_k, h′_k)` for every agent.
    pub fn target_actions(&self, batch: &Batch) -> Result<Vec<Tensor>> {
        let mut b = Eager;
        self.agents
            .iter()
            .enumerate()
            .map(|(k, a)| a.target_actor.act(&mut b, &batch.next_obs[k], &batch.next_windows[k]))
            .collect()
    }

    /// Critic input `x` for `agent`. With `use_targets` it is `x′`, built from
    /// the target critic's encoders, `s′`, `h′` and target actions.
    pub fn encode_critic_input(&self, agent: usize, batch: &Batch, use_targets: bool) -> Result<Tensor> {
        let mut b = Eager;
        let a = &self.agents[agent];
        if use_targets {
            let acts = self.target_actions(batch)?;
            let codes = a.target_critic.history(&mut b, &batch.next_windows)?;
            a.target_critic.input(&mut b, &codes, &batch.next_obs, &acts)
        } else {
            let codes = a.critic.history(&mut b, &batch.windows)?;
            a.critic.input(&mut b, &codes, &batch.obs, &batch.actions)
        }
    }

    /// `y = r + γ·Q′_i(x′)` per sample, given precomputed target actions.
    pub fn compute_target(&self, agent: usize, batch: &Batch, target_actions: &[Tensor]) -> Result<Tensor> {
        let mut b = Eager;
        let a = &self.agents[agent];
        let codes = a.target_critic.history(&mut b, &batch.next_windows)?;
        let x = a.target_critic.input(&mut b, &codes, &batch.next_obs, target_actions)?;
        let q = a.target_critic.q(&mut b, &x)?;
        let gamma = self.cfg.gamma;
        batch.rewards[agent].zip_map(&q, "compute_target", |r, q| r + gamma * q)
    }

    /// One optimizer step on agent `i`'s critic toward `y`; returns the
    /// pre-step loss.
    pub fn critic_update(&mut self, agent: usize, batch: &Batch, y: &Tensor) -> Result<f64> {
        let clip = self.cfg.grad_clip;
        let a = &mut self.agents[agent];
        let mut tape = Tape::new();
        let loss = critic_loss(&a.critic, &mut tape, batch, y)?;
        let value = tape.value(&loss).item()?;
        let grads = tape.backward(&loss)?;
        apply(&mut a.critic, &mut a.critic_opt, |p| grads.param_or_zeros(p), clip)?;
        Ok(value)
    }

    /// One ascent step on agent `i`'s actor through its frozen critic, with
    /// the other agents' actions taken from the batch. Returns the pre-step
    /// mean `Q`.
    pub fn actor_update(&mut self, agent: usize, batch: &Batch) -> Result<f64> {
        let (clip, reg) = (self.cfg.grad_clip, self.cfg.actor_reg);
        let a = &mut self.agents[agent];
        let codes = a.critic.history(&mut Eager, &batch.windows)?;
        let mut tape = Tape::new();
        let obs_i = tape.constant(batch.obs[agent].clone());
        let window_i = lift(&mut tape, &batch.windows[agent]);
        let logits = a.actor.logits(&mut tape, &obs_i, &window_i)?;
        let act_i = a.actor.head(&mut tape, &logits)?;
        let critic = &a.critic;
        let q = tape.with_frozen_params(|t| -> Result<_> {
            let codes = lift(t, &codes);
            let obs = lift(t, &batch.obs);
            let mut acts = lift(t, &batch.actions);
            acts[agent] = act_i;
            let x = critic.input(t, &codes, &obs, &acts)?;
            critic.q(t, &x)
        })?;
        let mean_q = tape.mean_all(&q);
        let objective = tape.value(&mean_q).item()?;
        let mut loss = tape.scale(&mean_q, -1.0);
        if reg > 0.0 {
            let sq = tape.mul(&logits, &logits)?;
            let pen = tape.mean_all(&sq);
            let pen = tape.scale(&pen, reg);
            loss = tape.add(&loss, &pen)?;
        }
        let grads = tape.backward(&loss)?;
        apply(&mut a.actor, &mut a.actor_opt, |p| grads.param_or_zeros(p), clip)?;
        Ok(objective)
    }

    /// `θ′ ← τθ + (1−τ)θ′` for every target parameter.
    pub fn soft_update(&mut self, tau: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::Invalid(format!("soft update rate {tau} outside [0, 1]")));
        }
        for a in &mut self.agents {
            blend(&a.actor, &mut a.target_actor, tau);
            blend(&a.critic, &mut a.target_critic, tau);
        }
        Ok(())
    }

    /// Critic then actor step for every agent, followed by one soft update.
    pub fn update(&mut self, batch: &Batch) -> Result<UpdateStats> {
        let targets = self.target_actions(batch)?;
        let mut stats = UpdateStats::default();
        for i in 0..self.num_agents() {
            let y = self.compute_target(i, batch, &targets)?;
            stats.critic_loss.push(self.critic_update(i, batch, &y)?);
            stats.actor_objective.push(self.actor_update(i, batch)?);
        }
        self.soft_update(self.cfg.tau)?;
        Ok(stats)
    }

    /// Every parameter with a stable checkpoint name.
    pub fn named_params(&self) -> Vec<(String, &Param)> {
        let mut out = Vec::new();
        for (i, a) in self.agents.iter().enumerate() {
            let groups: [(&str, Vec<&Param>); 4] = [
                ("actor", a.actor.params()),
                ("critic", a.critic.params()),
                ("target_actor", a.target_actor.params()),
                ("target_critic", a.target_critic.params()),
            ];
            for (g, ps) in groups {
                out.extend(ps.into_iter().enumerate().map(|(j, p)| (format!("agent{i}/{g}/{j}"), p)));
            }
        }
        out
    }

    pub fn named_params_mut(&mut self) -> Vec<(String, &mut Param)> {
        let mut out = Vec::new();
        for (i, a) in self.agents.iter_mut().enumerate() {
            let groups: [(&str, Vec<&mut Param>); 4] = [
                ("actor", a.actor.params_mut()),
                ("critic", a.critic.params_mut()),
                ("target_actor", a.target_actor.params_mut()),
                ("target_critic", a.target_critic.params_mut()),
            ];
            for (g, ps) in groups {
                out.extend(ps.into_iter().enumerate().map(|(j, p)| (format!("agent{i}/{g}/{j}"), p)));
            }
        }
        out
    }
}

fn apply<N: Parameterized>(net: &mut N, opt: &mut Adam, grad: impl Fn(&Param) -> Tensor, clip: f64) -> Result<()> {
    let mut g: Vec<Tensor> = net.params().into_iter().map(grad).collect();
    if clip > 0.0 {
        clip_grad_norm(&mut g, clip);
    }
    let mut values: Vec<&mut Tensor> = net.params_mut().into_iter().map(|p| &mut p.value).collect();
    let refs: Vec<&Tensor> = g.iter().collect();
    opt.step(&mut values, &refs)
}

fn blend<N: Parameterized>(online: &N, target: &mut N, tau: f64) {
    for (src, dst) in online.params().into_iter().zip(target.params_mut()) {
        for (t, &s) in dst.value.data_mut().iter_mut().zip(src.value.data()) {
            *t = tau * s + (1.0 - tau) * *t;
        }
    }
}

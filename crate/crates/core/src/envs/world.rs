use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{observe, reward};
use crate::{Error, Result};

/// Integration step in seconds.
pub const DT: f64 = 0.1;
/// Fraction of velocity lost per step.
pub const DAMPING: f64 = 0.25;
/// Scales a unit action into a force.
pub const FORCE_SENSITIVITY: f64 = 5.0;
/// Spring constant for overlapping colliders.
pub const CONTACT_STIFFNESS: f64 = 100.0;
const PREDATOR_MAX_SPEED: f64 = 1.0;
const PREY_SPEED_RATIO: f64 = 1.3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scenario {
    CoopNav,
    PhysDeception,
    CoopComm,
    PredatorPrey,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [Scenario::CoopNav, Scenario::PhysDeception, Scenario::CoopComm, Scenario::PredatorPrey];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::CoopNav => "coop_nav",
            Scenario::PhysDeception => "phys_deception",
            Scenario::CoopComm => "coop_comm",
            Scenario::PredatorPrey => "predator_prey",
        }
    }

    /// Human-readable title used in comparison tables.
    pub fn title(self) -> &'static str {
        match self {
            Scenario::CoopNav => "Cooperative Navigation",
            Scenario::PhysDeception => "Physical Deception",
            Scenario::CoopComm => "Cooperative Communication",
            Scenario::PredatorPrey => "Predator-Prey",
        }
    }

    /// True when every agent always receives the same reward.
    pub fn is_fully_cooperative(self) -> bool {
        matches!(self, Scenario::CoopNav | Scenario::CoopComm)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.as_str() == s)
            .ok_or_else(|| Error::UnknownScenario(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EntityKind {
    Agent,
    Landmark,
    Obstacle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Good,
    Adversary,
    Speaker,
    Listener,
    Predator,
    Prey,
    None,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Entity {
    pub kind: EntityKind,
    pub role: Role,
    pub pos: [f64; 2],
    pub vel: [f64; 2],
    pub size: f64,
    pub movable: bool,
    pub collide: bool,
    pub max_speed: Option<f64>,
    pub color: usize,
}

impl Entity {
    fn new(kind: EntityKind, role: Role, size: f64) -> Self {
        Self {
            kind,
            role,
            pos: [0.0; 2],
            vel: [0.0; 2],
            size,
            movable: kind == EntityKind::Agent,
            collide: false,
            max_speed: None,
            color: 0,
        }
    }
}

/// How cooperative navigation scores landmark coverage.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NavReward {
    /// Each landmark contributes its distance to the nearest agent.
    MinOverAgents,
    /// Each agent contributes its distance to its assigned landmark.
    Assigned,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvOptions {
    pub episode_len: usize,
    pub nav_reward: NavReward,
}

impl Default for EnvOptions {
    fn default() -> Self {
        Self { episode_len: 25, nav_reward: NavReward::MinOverAgents }
    }
}

/// Full hidden state of a particle world. Agents occupy the leading entries
/// of `entities`.
#[derive(Clone, Debug, PartialEq)]
pub struct WorldState {
    pub scenario: Scenario,
    pub entities: Vec<Entity>,
    pub num_agents: usize,
    pub step: usize,
    pub options: EnvOptions,
    /// Scenario-specific goal indices: the landmark assigned to each agent in
    /// cooperative navigation, otherwise a single landmark index.
    pub goal: Vec<usize>,
    /// Message broadcast by the speaker on the previous step.
    pub comm: Vec<f64>,
    pub rng: ChaCha8Rng,
}

/// What each agent's flat action vector contains.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ActionSpec {
    pub movement: bool,
    pub comm_dim: usize,
}

impl ActionSpec {
    pub fn dim(&self) -> usize {
        if self.movement { 2 + self.comm_dim } else { self.comm_dim }
    }
}

/// One agent's action: a force in `[-1, 1]²` and an optional message on the
/// probability simplex.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentAction {
    pub force: [f64; 2],
    pub comm: Vec<f64>,
}

impl AgentAction {
    pub fn idle() -> Self {
        Self { force: [0.0; 2], comm: Vec::new() }
    }

    /// Splits a flat action vector according to `spec`.
    pub fn from_flat(spec: ActionSpec, flat: &[f64]) -> Result<Self> {
        if flat.len() != spec.dim() {
            return Err(Error::shape("agent_action", format!("expected {} values, got {}", spec.dim(), flat.len())));
        }
        let (force, rest) = if spec.movement { ([flat[0], flat[1]], &flat[2..]) } else { ([0.0; 2], flat) };
        Ok(Self { force, comm: rest.to_vec() })
    }

    pub fn to_flat(&self, spec: ActionSpec) -> Vec<f64> {
        let mut v = Vec::with_capacity(spec.dim());
        if spec.movement {
            v.extend_from_slice(&self.force);
        }
        v.extend_from_slice(&self.comm);
        v
    }
}

pub type JointAction = Vec<AgentAction>;

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub state: WorldState,
    pub observations: Vec<Vec<f64>>,
    pub rewards: Vec<f64>,
    pub done: bool,
}

pub const COMM_DIM: usize = 3;

impl WorldState {
    pub fn agents(&self) -> &[Entity] {
        &self.entities[..self.num_agents]
    }

    pub fn others(&self) -> &[Entity] {
        &self.entities[self.num_agents..]
    }

    pub fn action_spec(&self, agent: usize) -> ActionSpec {
        let e = &self.entities[agent];
        ActionSpec { movement: e.movable, comm_dim: if e.role == Role::Speaker { COMM_DIM } else { 0 } }
    }

    pub fn action_specs(&self) -> Vec<ActionSpec> {
        (0..self.num_agents).map(|i| self.action_spec(i)).collect()
    }

    pub fn obs_dims(&self) -> Vec<usize> {
        (0..self.num_agents).map(|i| observe::obs_dim(self, i)).collect()
    }

    pub fn is_done(&self) -> bool {
        self.step >= self.options.episode_len
    }
}

pub fn scenario_init(name: &str, seed: u64) -> Result<WorldState> {
    scenario_init_with(name.parse()?, seed, EnvOptions::default())
}

pub fn scenario_init_with(scenario: Scenario, seed: u64, options: EnvOptions) -> Result<WorldState> {
    if options.episode_len == 0 {
        return Err(Error::Invalid("episode length must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let agent = |role, size| {
        let mut e = Entity::new(EntityKind::Agent, role, size);
        e.collide = true;
        e
    };
    let landmark = |size| Entity::new(EntityKind::Landmark, Role::None, size);
    let (mut entities, num_agents) = match scenario {
        Scenario::CoopNav => {
            let mut v: Vec<Entity> = (0..3).map(|_| agent(Role::Good, 0.15)).collect();
            v.extend((0..3).map(|_| landmark(0.05)));
            (v, 3)
        }
        Scenario::PhysDeception => {
            let mut v = vec![agent(Role::Adversary, 0.15), agent(Role::Good, 0.15), agent(Role::Good, 0.15)];
            for e in &mut v {
                e.collide = false;
            }
            v.extend((0..2).map(|_| landmark(0.08)));
            (v, 3)
        }
        Scenario::CoopComm => {
            let mut speaker = agent(Role::Speaker, 0.075);
            speaker.movable = false;
            speaker.collide = false;
            let mut listener = agent(Role::Listener, 0.075);
            listener.collide = false;
            let mut v = vec![speaker, listener];
            v.extend((0..3).map(|_| landmark(0.04)));
            (v, 2)
        }
        Scenario::PredatorPrey => {
            let mut v: Vec<Entity> = (0..3)
                .map(|_| {
                    let mut e = agent(Role::Predator, 0.075);
                    e.max_speed = Some(PREDATOR_MAX_SPEED);
                    e
                })
                .collect();
            let mut prey = agent(Role::Prey, 0.05);
            prey.max_speed = Some(PREDATOR_MAX_SPEED * PREY_SPEED_RATIO);
            v.push(prey);
            for _ in 0..2 {
                let mut o = Entity::new(EntityKind::Obstacle, Role::None, 0.2);
                o.collide = true;
                v.push(o);
            }
            (v, 4)
        }
    };
    let mut landmark_color = 0;
    for e in &mut entities {
        e.pos = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        if e.kind == EntityKind::Landmark {
            e.color = landmark_color;
            landmark_color += 1;
        }
    }
    let goal = match scenario {
        Scenario::CoopNav => {
            let mut perm: Vec<usize> = (0..3).collect();
            perm.shuffle(&mut rng);
            perm
        }
        Scenario::PhysDeception => vec![rng.random_range(0..2)],
        Scenario::CoopComm => vec![rng.random_range(0..3)],
        Scenario::PredatorPrey => Vec::new(),
    };
    let comm = if scenario == Scenario::CoopComm { vec![0.0; COMM_DIM] } else { Vec::new() };
    Ok(WorldState { scenario, entities, num_agents, step: 0, options, goal, comm, rng })
}

fn check_actions(s: &WorldState, a: &[AgentAction]) -> Result<()> {
    if a.len() != s.num_agents {
        return Err(Error::shape("world_step", format!("{} actions for {} agents", a.len(), s.num_agents)));
    }
    for (i, act) in a.iter().enumerate() {
        let spec = s.action_spec(i);
        if act.comm.len() != spec.comm_dim {
            return Err(Error::shape(
                "world_step",
                format!("agent {i}: message of length {} (expected {})", act.comm.len(), spec.comm_dim),
            ));
        }
        if act.force.iter().chain(&act.comm).any(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("agent {i}: non-finite action")));
        }
    }
    Ok(())
}

/// Advances the world by one step. Pure: the input state is not modified.
pub fn world_step(s: &WorldState, a: &[AgentAction]) -> Result<StepResult> {
    check_actions(s, a)?;
    let mut next = s.clone();
    let n = next.entities.len();
    let mut force = vec![[0.0f64; 2]; n];
    for (i, act) in a.iter().enumerate() {
        if next.entities[i].movable {
            for d in 0..2 {
                force[i][d] = act.force[d].clamp(-1.0, 1.0) * FORCE_SENSITIVITY;
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let (ei, ej) = (&next.entities[i], &next.entities[j]);
            if !(ei.collide && ej.collide) || !(ei.movable || ej.movable) {
                continue;
            }
            let delta = [ei.pos[0] - ej.pos[0], ei.pos[1] - ej.pos[1]];
            let dist = delta[0].hypot(delta[1]);
            let overlap = ei.size + ej.size - dist;
            if overlap <= 0.0 || dist == 0.0 {
                continue;
            }
            let mag = CONTACT_STIFFNESS * overlap / dist;
            for d in 0..2 {
                force[i][d] += mag * delta[d];
                force[j][d] -= mag * delta[d];
            }
        }
    }
    for (e, f) in next.entities.iter_mut().zip(&force) {
        if !e.movable {
            continue;
        }
        for d in 0..2 {
            e.vel[d] = e.vel[d] * (1.0 - DAMPING) + f[d] * DT;
        }
        if let Some(cap) = e.max_speed {
            let speed = e.vel[0].hypot(e.vel[1]);
            if speed > cap {
                e.vel = [e.vel[0] / speed * cap, e.vel[1] / speed * cap];
            }
        }
        for d in 0..2 {
            e.pos[d] += e.vel[d] * DT;
        }
    }
    if next.scenario == Scenario::CoopComm {
        next.comm = a[0].comm.clone();
    }
    next.step += 1;
    let rewards = reward::rewards(&next)?;
    let observations = observe::observe_all(&next);
    let done = next.is_done();
    Ok(StepResult { state: next, observations, rewards, done })
}

//! Deterministic particle worlds: cooperative navigation, physical
//! deception, cooperative communication and predator-prey.
//!
//! Every observation starts with the agent's own velocity and position
//! (four values). The remaining layout per scenario and role is:
//!
//! | scenario | role | tail |
//! |---|---|---|
//! | `coop_nav` | agent | 3 landmark offsets, 2 other-agent offsets (14) |
//! | `phys_deception` | cooperator | goal offset, 2 landmark offsets, 2 other-agent offsets (14) |
//! | `phys_deception` | adversary | 2 landmark offsets, 2 other-agent offsets (12) |
//! | `coop_comm` | speaker | goal colour one-hot (7) |
//! | `coop_comm` | listener | 3 landmark offsets, last speaker message (13) |
//! | `predator_prey` | predator | 2 obstacle offsets, 3 other-agent offsets, prey velocity (16) |
//! | `predator_prey` | prey | 2 obstacle offsets, 3 predator offsets (14) |
//!
//! Offsets are `other − self`, in entity order.

mod observe;
mod recorder;
mod reward;
mod world;

pub use observe::{obs_dim, observe, observe_all};
pub use recorder::{TrajectoryRecorder, TRAJECTORY_COLUMNS_DOC};
pub use reward::{reward_coop_comm, reward_coop_nav, reward_phys_deception, reward_predator_prey, rewards};
pub use world::{
    scenario_init, scenario_init_with, world_step, ActionSpec, AgentAction, EntityKind, EnvOptions, Entity,
    JointAction, NavReward, Role, Scenario, StepResult, WorldState, DAMPING, DT, FORCE_SENSITIVITY,
};

#[cfg(test)]
mod tests;

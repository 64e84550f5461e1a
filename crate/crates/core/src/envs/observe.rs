use super::world::{EntityKind, Role, Scenario, WorldState};
use crate::{Error, Result};

fn offset(from: [f64; 2], to: [f64; 2]) -> [f64; 2] {
    [to[0] - from[0], to[1] - from[1]]
}

/// Observation length for `agent` (fixed for the whole episode).
pub fn obs_dim(s: &WorldState, agent: usize) -> usize {
    let landmarks = s.others().iter().filter(|e| e.kind != EntityKind::Agent).count();
    let others = s.num_agents - 1;
    let role = s.entities[agent].role;
    4 + match (s.scenario, role) {
        (Scenario::CoopNav, _) => 2 * landmarks + 2 * others,
        (Scenario::PhysDeception, Role::Adversary) => 2 * landmarks + 2 * others,
        (Scenario::PhysDeception, _) => 2 + 2 * landmarks + 2 * others,
        (Scenario::CoopComm, Role::Speaker) => landmarks,
        (Scenario::CoopComm, _) => 2 * landmarks + s.comm.len(),
        (Scenario::PredatorPrey, Role::Predator) => 2 * landmarks + 2 * others + 2,
        (Scenario::PredatorPrey, _) => 2 * landmarks + 2 * others,
    }
}

/// Partial view of the world for one agent; see the module docs for layout.
pub fn observe(s: &WorldState, agent: usize) -> Result<Vec<f64>> {
    if agent >= s.num_agents {
        return Err(Error::Invalid(format!("agent index {agent} out of range ({} agents)", s.num_agents)));
    }
    let me = &s.entities[agent];
    let mut o = Vec::with_capacity(obs_dim(s, agent));
    o.extend_from_slice(&me.vel);
    o.extend_from_slice(&me.pos);
    let landmark_offsets = |o: &mut Vec<f64>| {
        for e in s.others() {
            o.extend_from_slice(&offset(me.pos, e.pos));
        }
    };
    let agent_offsets = |o: &mut Vec<f64>| {
        for (j, e) in s.agents().iter().enumerate() {
            if j != agent {
                o.extend_from_slice(&offset(me.pos, e.pos));
            }
        }
    };
    match (s.scenario, me.role) {
        (Scenario::CoopNav, _) | (Scenario::PhysDeception, Role::Adversary) => {
            landmark_offsets(&mut o);
            agent_offsets(&mut o);
        }
        (Scenario::PhysDeception, _) => {
            let goal = &s.others()[s.goal[0]];
            o.extend_from_slice(&offset(me.pos, goal.pos));
            landmark_offsets(&mut o);
            agent_offsets(&mut o);
        }
        (Scenario::CoopComm, Role::Speaker) => {
            let colors = s.others().len();
            let goal_color = s.others()[s.goal[0]].color;
            o.extend((0..colors).map(|c| if c == goal_color { 1.0 } else { 0.0 }));
        }
        (Scenario::CoopComm, _) => {
            landmark_offsets(&mut o);
            o.extend_from_slice(&s.comm);
        }
        (Scenario::PredatorPrey, role) => {
            landmark_offsets(&mut o);
            agent_offsets(&mut o);
            if role == Role::Predator {
                for e in s.agents().iter().filter(|e| e.role == Role::Prey) {
                    o.extend_from_slice(&e.vel);
                }
            }
        }
    }
    debug_assert_eq!(o.len(), obs_dim(s, agent));
    Ok(o)
}

pub fn observe_all(s: &WorldState) -> Vec<Vec<f64>> {
    (0..s.num_agents).map(|i| observe(s, i).expect("index in range")).collect()
}

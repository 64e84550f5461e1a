use super::world::{NavReward, Role, Scenario, WorldState};
use crate::{Error, Result};

/// Bonus (predator) and penalty (prey) per contact.
pub const CONTACT_REWARD: f64 = 10.0;
/// Penalty per overlapping pair of navigating agents.
pub const COLLISION_PENALTY: f64 = 1.0;

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn expect(s: &WorldState, sc: Scenario) -> Result<()> {
    if s.scenario != sc {
        return Err(Error::WrongScenario { expected: sc.as_str(), found: s.scenario.as_str() });
    }
    Ok(())
}

/// Shared team reward: negative landmark coverage distance, minus a penalty
/// per colliding agent pair.
pub fn reward_coop_nav(s: &WorldState) -> Result<Vec<f64>> {
    expect(s, Scenario::CoopNav)?;
    let agents = s.agents();
    let landmarks = s.others();
    let coverage: f64 = match s.options.nav_reward {
        NavReward::MinOverAgents => landmarks
            .iter()
            .map(|l| agents.iter().map(|a| dist(a.pos, l.pos)).fold(f64::INFINITY, f64::min))
            .sum(),
        NavReward::Assigned => agents.iter().zip(&s.goal).map(|(a, &g)| dist(a.pos, landmarks[g].pos)).sum(),
    };
    let mut collisions = 0usize;
    for i in 0..agents.len() {
        for j in i + 1..agents.len() {
            if dist(agents[i].pos, agents[j].pos) < agents[i].size + agents[j].size {
                collisions += 1;
            }
        }
    }
    let r = -coverage - COLLISION_PENALTY * collisions as f64;
    Ok(vec![r; agents.len()])
}

/// Cooperators: adversary's distance to the goal minus their own best
/// distance. Adversary: negative distance to the goal.
pub fn reward_phys_deception(s: &WorldState) -> Result<Vec<f64>> {
    expect(s, Scenario::PhysDeception)?;
    let goal = s.others()[s.goal[0]].pos;
    let adv = s.agents().iter().filter(|a| a.role == Role::Adversary).map(|a| dist(a.pos, goal)).sum::<f64>();
    let best_good = s
        .agents()
        .iter()
        .filter(|a| a.role == Role::Good)
        .map(|a| dist(a.pos, goal))
        .fold(f64::INFINITY, f64::min);
    Ok(s.agents()
        .iter()
        .map(|a| if a.role == Role::Adversary { -dist(a.pos, goal) } else { adv - best_good })
        .collect())
}

/// Both agents: negative listener distance to the goal landmark.
pub fn reward_coop_comm(s: &WorldState) -> Result<Vec<f64>> {
    expect(s, Scenario::CoopComm)?;
    let listener = s.agents().iter().find(|a| a.role == Role::Listener).expect("listener present");
    let d = dist(listener.pos, s.others()[s.goal[0]].pos);
    Ok(vec![-d; s.num_agents])
}

/// Predators chase (negative distance to nearest prey, bonus on own
/// contact); prey flee (distance to nearest predator, penalty per contact).
pub fn reward_predator_prey(s: &WorldState) -> Result<Vec<f64>> {
    expect(s, Scenario::PredatorPrey)?;
    let agents = s.agents();
    let touching = |a: usize, b: usize| dist(agents[a].pos, agents[b].pos) < agents[a].size + agents[b].size;
    let predators: Vec<usize> = (0..agents.len()).filter(|&i| agents[i].role == Role::Predator).collect();
    let prey: Vec<usize> = (0..agents.len()).filter(|&i| agents[i].role == Role::Prey).collect();
    let nearest = |i: usize, pool: &[usize]| pool.iter().map(|&j| dist(agents[i].pos, agents[j].pos)).fold(f64::INFINITY, f64::min);
    Ok((0..agents.len())
        .map(|i| {
            if agents[i].role == Role::Predator {
                let hit = prey.iter().any(|&j| touching(i, j));
                -nearest(i, &prey) + if hit { CONTACT_REWARD } else { 0.0 }
            } else {
                let hits = predators.iter().filter(|&&j| touching(i, j)).count();
                nearest(i, &predators) - CONTACT_REWARD * hits as f64
            }
        })
        .collect())
}

pub fn rewards(s: &WorldState) -> Result<Vec<f64>> {
    match s.scenario {
        Scenario::CoopNav => reward_coop_nav(s),
        Scenario::PhysDeception => reward_phys_deception(s),
        Scenario::CoopComm => reward_coop_comm(s),
        Scenario::PredatorPrey => reward_predator_prey(s),
    }
}

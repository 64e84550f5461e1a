use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::Error;

fn idle(s: &WorldState) -> JointAction {
    (0..s.num_agents)
        .map(|i| AgentAction { force: [0.0; 2], comm: vec![0.0; s.action_spec(i).comm_dim] })
        .collect()
}

/// Puts every entity at a random position (sometimes clustered so that
/// contacts occur) and draws fresh goals.
fn scramble(s: &mut WorldState, r: &mut ChaCha8Rng) {
    let spread = if r.random_bool(0.3) { 0.2 } else { 2.0 };
    for e in &mut s.entities {
        e.pos = [r.random_range(-spread..spread), r.random_range(-spread..spread)];
        e.vel = [r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)];
    }
    let landmarks = s.others().len();
    for g in &mut s.goal {
        *g = r.random_range(0..landmarks.min(if s.scenario == Scenario::PhysDeception { 2 } else { 3 }));
    }
}

fn d(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

#[test]
fn init_is_deterministic() {
    for sc in Scenario::ALL {
        assert_eq!(scenario_init(sc.as_str(), 42).unwrap(), scenario_init(sc.as_str(), 42).unwrap());
    }
    assert_ne!(scenario_init("coop_nav", 1).unwrap(), scenario_init("coop_nav", 2).unwrap());
}

#[test]
fn unknown_scenario_is_error() {
    assert!(matches!(scenario_init("simple_tag", 0), Err(Error::UnknownScenario(_))));
}

#[test]
fn entity_counts() {
    let s = scenario_init("coop_nav", 0).unwrap();
    assert_eq!(s.num_agents, 3);
    assert_eq!(s.others().iter().filter(|e| e.kind == EntityKind::Landmark).count(), 3);

    let s = scenario_init("predator_prey", 0).unwrap();
    assert_eq!(s.agents().iter().filter(|e| e.role == Role::Predator).count(), 3);
    assert_eq!(s.agents().iter().filter(|e| e.role == Role::Prey).count(), 1);
    assert_eq!(s.others().iter().filter(|e| e.kind == EntityKind::Obstacle).count(), 2);

    let s = scenario_init("phys_deception", 0).unwrap();
    assert_eq!(s.agents().iter().filter(|e| e.role == Role::Good).count(), 2);
    assert_eq!(s.agents().iter().filter(|e| e.role == Role::Adversary).count(), 1);
    assert_eq!(s.others().len(), 2);

    let s = scenario_init("coop_comm", 0).unwrap();
    assert_eq!(s.num_agents, 2);
    assert_eq!(s.others().len(), 3);
}

#[test]
fn init_places_entities_in_unit_square_at_rest() {
    for sc in Scenario::ALL {
        let s = scenario_init(sc.as_str(), 9).unwrap();
        for e in &s.entities {
            assert!(e.pos.iter().all(|p| (-1.0..1.0).contains(p)));
            assert_eq!(e.vel, [0.0, 0.0]);
        }
    }
}

#[test]
fn zero_action_at_rest_keeps_position() {
    let mut s = scenario_init("coop_nav", 3).unwrap();
    for (i, e) in s.entities.iter_mut().enumerate() {
        e.pos = [i as f64, 0.0];
    }
    let next = world_step(&s, &idle(&s)).unwrap().state;
    for (a, b) in s.entities.iter().zip(&next.entities) {
        assert_eq!(a.pos, b.pos);
    }
}

#[test]
fn zero_action_damps_velocity() {
    let mut s = scenario_init("coop_nav", 3).unwrap();
    for (i, e) in s.entities.iter_mut().enumerate() {
        e.pos = [3.0 * i as f64, 0.0];
    }
    s.entities[0].vel = [0.4, -0.8];
    let next = world_step(&s, &idle(&s)).unwrap().state;
    assert_eq!(next.entities[0].vel, [0.75 * 0.4, 0.75 * -0.8]);
    assert_eq!(next.entities[0].pos, [0.0 + 0.75 * 0.4 * DT, 0.75 * -0.8 * DT]);
}

#[test]
fn force_integration() {
    let mut s = scenario_init("coop_nav", 3).unwrap();
    for (i, e) in s.entities.iter_mut().enumerate() {
        e.pos = [3.0 * i as f64, 0.0];
    }
    let mut a = idle(&s);
    a[1].force = [1.0, -0.5];
    let next = world_step(&s, &a).unwrap().state;
    assert_eq!(next.entities[1].vel, [FORCE_SENSITIVITY * DT, -0.5 * FORCE_SENSITIVITY * DT]);
}

#[test]
fn step_is_pure() {
    let s = scenario_init("predator_prey", 5).unwrap();
    let mut a = idle(&s);
    a[0].force = [0.3, 0.9];
    let r1 = world_step(&s, &a).unwrap();
    let r2 = world_step(&s, &a).unwrap();
    assert_eq!(r1, r2);
    assert_eq!(s, scenario_init("predator_prey", 5).unwrap());
}

#[test]
fn step_rejects_bad_dimensions() {
    let s = scenario_init("coop_comm", 5).unwrap();
    let mut a = idle(&s);
    a.pop();
    assert!(world_step(&s, &a).is_err());
    let mut a = idle(&s);
    a[0].comm = vec![1.0];
    assert!(world_step(&s, &a).is_err());
}

#[test]
fn overlapping_agents_are_pushed_apart() {
    let mut s = scenario_init("coop_nav", 3).unwrap();
    for (i, e) in s.entities.iter_mut().enumerate() {
        e.pos = [3.0 * i as f64, 5.0];
    }
    s.entities[0].pos = [0.0, 0.0];
    s.entities[1].pos = [0.1, 0.0];
    let next = world_step(&s, &idle(&s)).unwrap().state;
    assert!(next.entities[0].vel[0] < 0.0);
    assert!(next.entities[1].vel[0] > 0.0);
    assert_eq!(next.entities[0].vel[0], -next.entities[1].vel[0]);
}

#[test]
fn prey_is_faster_than_predators() {
    let mut s = scenario_init("predator_prey", 3).unwrap();
    for (i, e) in s.entities.iter_mut().enumerate() {
        e.pos = [4.0 * i as f64, 0.0];
    }
    let mut a = idle(&s);
    for act in &mut a {
        act.force = [1.0, 1.0];
    }
    let mut cur = s;
    for _ in 0..20 {
        cur = world_step(&cur, &a).unwrap().state;
    }
    let speed = |e: &Entity| e.vel[0].hypot(e.vel[1]);
    assert!((speed(&cur.entities[0]) - 1.0).abs() < 1e-12);
    assert!((speed(&cur.entities[3]) - 1.3).abs() < 1e-12);
}

#[test]
fn episode_ends_at_configured_length() {
    for len in [1usize, 7, 25] {
        let opts = EnvOptions { episode_len: len, ..EnvOptions::default() };
        let mut s = scenario_init_with(Scenario::CoopNav, 1, opts).unwrap();
        for t in 1..=len {
            let r = world_step(&s, &idle(&s)).unwrap();
            assert_eq!(r.done, t == len);
            s = r.state;
        }
    }
    assert!(scenario_init_with(Scenario::CoopNav, 1, EnvOptions { episode_len: 0, ..Default::default() }).is_err());
}

#[test]
fn comm_reaches_listener_next_step() {
    let s = scenario_init("coop_comm", 2).unwrap();
    let mut a = idle(&s);
    a[0].comm = vec![0.2, 0.5, 0.3];
    let r = world_step(&s, &a).unwrap();
    let listener = &r.observations[1];
    assert_eq!(&listener[listener.len() - 3..], &[0.2, 0.5, 0.3]);
}

#[test]
fn observation_layouts() {
    for sc in Scenario::ALL {
        let mut s = scenario_init(sc.as_str(), 4).unwrap();
        let dims = s.obs_dims();
        for i in 0..s.num_agents {
            s.entities[i].pos = [0.0; 2];
            s.entities[i].vel = [0.0; 2];
            let o = observe(&s, i).unwrap();
            assert_eq!(&o[..4], &[0.0; 4]);
        }
        assert!(observe(&s, s.num_agents).is_err());
        let mut cur = s;
        for _ in 0..10 {
            let a: JointAction = (0..cur.num_agents)
                .map(|i| AgentAction { force: [0.7, -0.2], comm: vec![1.0 / 3.0; cur.action_spec(i).comm_dim] })
                .collect();
            let r = world_step(&cur, &a).unwrap();
            assert_eq!(r.observations.iter().map(Vec::len).collect::<Vec<_>>(), dims);
            cur = r.state;
        }
    }
    assert_eq!(scenario_init("coop_nav", 0).unwrap().obs_dims(), vec![14, 14, 14]);
    assert_eq!(scenario_init("phys_deception", 0).unwrap().obs_dims(), vec![12, 14, 14]);
    assert_eq!(scenario_init("coop_comm", 0).unwrap().obs_dims(), vec![7, 13]);
    assert_eq!(scenario_init("predator_prey", 0).unwrap().obs_dims(), vec![16, 16, 16, 14]);
}

#[test]
fn listener_does_not_see_goal_color() {
    let mut s = scenario_init("coop_comm", 11).unwrap();
    s.comm = vec![0.0; 3];
    let before = observe(&s, 1).unwrap();
    s.goal[0] = (s.goal[0] + 1) % 3;
    assert_eq!(observe(&s, 1).unwrap(), before);
    assert_ne!(observe(&s, 0).unwrap(), {
        let mut t = s.clone();
        t.goal[0] = (t.goal[0] + 1) % 3;
        observe(&t, 0).unwrap()
    });
}

#[test]
fn coop_nav_reward_cases() {
    let mut s = scenario_init("coop_nav", 0).unwrap();
    let spots = [[-2.0, 0.0], [0.0, 2.0], [2.0, 0.0]];
    for i in 0..3 {
        s.entities[i].pos = spots[i];
        s.entities[3 + i].pos = spots[(i + 1) % 3];
    }
    assert_eq!(reward_coop_nav(&s).unwrap(), vec![0.0; 3]);

    // single landmark term: nearest agent at (3,4) from the origin
    s.entities[3].pos = [0.0, 0.0];
    s.entities[4].pos = s.entities[1].pos;
    s.entities[5].pos = s.entities[2].pos;
    s.entities[0].pos = [3.0, 4.0];
    s.entities[1].pos = [0.0, 12.0];
    s.entities[2].pos = [9.0, 9.0];
    s.entities[4].pos = [0.0, 12.0];
    s.entities[5].pos = [9.0, 9.0];
    assert_eq!(reward_coop_nav(&s).unwrap(), vec![-5.0; 3]);
    assert!(matches!(reward_coop_comm(&s), Err(Error::WrongScenario { .. })));
}

#[test]
fn phys_deception_reward_cases() {
    let mut s = scenario_init("phys_deception", 0).unwrap();
    s.goal[0] = 0;
    s.entities[3].pos = [0.0, 0.0];
    s.entities[4].pos = [9.0, 9.0];
    s.entities[1].pos = [0.0, 0.0];
    s.entities[2].pos = [1.0, 1.0];
    s.entities[0].pos = [-3.0, 4.0];
    let r = reward_phys_deception(&s).unwrap();
    assert_eq!(r, vec![-5.0, 5.0, 5.0]);
    s.entities[0].pos = [0.0, 0.0];
    assert_eq!(reward_phys_deception(&s).unwrap()[0], 0.0);
}

#[test]
fn coop_comm_reward_cases() {
    let mut s = scenario_init("coop_comm", 0).unwrap();
    let g = 2 + s.goal[0];
    s.entities[g].pos = [0.0, 2.0];
    s.entities[1].pos = [0.0, 0.0];
    assert_eq!(reward_coop_comm(&s).unwrap(), vec![-2.0, -2.0]);
    s.entities[1].pos = [0.0, 2.0];
    assert_eq!(reward_coop_comm(&s).unwrap(), vec![0.0, 0.0]);
}

#[test]
fn predator_prey_reward_cases() {
    let mut s = scenario_init("predator_prey", 0).unwrap();
    for i in 0..3 {
        s.entities[i].pos = [-5.0 - i as f64, 0.0];
    }
    s.entities[3].pos = [5.0, 0.0];
    let r = reward_predator_prey(&s).unwrap();
    assert!(r[..3].iter().all(|&v| v < 0.0));
    assert!(r[3] > 0.0);

    s.entities[0].pos = [5.05, 0.0];
    let r = reward_predator_prey(&s).unwrap();
    assert!((r[0] - (10.0 - 0.05)).abs() < 1e-12);
    assert!((r[3] - (0.05 - 10.0)).abs() < 1e-12);
}

// ---------------------------------------------------------------- oracles

fn oracle_coop_nav(s: &WorldState) -> Vec<f64> {
    let (a, l) = (&s.entities[..3], &s.entities[3..6]);
    let mut total = 0.0;
    if s.options.nav_reward == NavReward::MinOverAgents {
        for lm in l {
            let mut best = f64::MAX;
            for ag in a {
                best = best.min(d(ag.pos, lm.pos));
            }
            total -= best;
        }
    } else {
        for (k, ag) in a.iter().enumerate() {
            total -= d(ag.pos, l[s.goal[k]].pos);
        }
    }
    for i in 0..3 {
        for j in 0..3 {
            if i < j && d(a[i].pos, a[j].pos) < a[i].size + a[j].size {
                total -= 1.0;
            }
        }
    }
    vec![total; 3]
}

fn oracle_phys(s: &WorldState) -> Vec<f64> {
    let g = s.entities[3 + s.goal[0]].pos;
    let adv = d(s.entities[0].pos, g);
    let good = d(s.entities[1].pos, g).min(d(s.entities[2].pos, g));
    vec![-adv, adv - good, adv - good]
}

fn oracle_comm(s: &WorldState) -> Vec<f64> {
    let r = -d(s.entities[1].pos, s.entities[2 + s.goal[0]].pos);
    vec![r, r]
}

fn oracle_pp(s: &WorldState) -> Vec<f64> {
    let prey = &s.entities[3];
    let mut out = Vec::new();
    let mut prey_r = f64::MAX;
    let mut contacts = 0.0;
    for p in &s.entities[..3] {
        let dd = d(p.pos, prey.pos);
        let hit = dd < p.size + prey.size;
        out.push(-dd + if hit { 10.0 } else { 0.0 });
        prey_r = prey_r.min(dd);
        if hit {
            contacts += 1.0;
        }
    }
    out.push(prey_r - 10.0 * contacts);
    out
}

#[test]
fn rewards_match_direct_formula_oracles() {
    let mut r = ChaCha8Rng::seed_from_u64(77);
    for sc in Scenario::ALL {
        let mut s = scenario_init(sc.as_str(), 1).unwrap();
        for trial in 0..1000 {
            scramble(&mut s, &mut r);
            if sc == Scenario::CoopNav {
                s.options.nav_reward = if trial % 2 == 0 { NavReward::MinOverAgents } else { NavReward::Assigned };
            }
            let got = rewards(&s).unwrap();
            let want = match sc {
                Scenario::CoopNav => oracle_coop_nav(&s),
                Scenario::PhysDeception => oracle_phys(&s),
                Scenario::CoopComm => oracle_comm(&s),
                Scenario::PredatorPrey => oracle_pp(&s),
            };
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() <= 1e-12, "{sc}: {g} vs {w}");
            }
            if sc.is_fully_cooperative() {
                assert!(got.iter().all(|&v| v == got[0]));
            }
        }
    }
}

#[test]
fn identical_action_sequences_give_identical_trajectories() {
    let run = || {
        let mut s = scenario_init("phys_deception", 8).unwrap();
        let mut r = ChaCha8Rng::seed_from_u64(3);
        let mut log = Vec::new();
        loop {
            let a: JointAction =
                (0..3).map(|_| AgentAction { force: [r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)], comm: vec![] }).collect();
            let res = world_step(&s, &a).unwrap();
            log.push((res.rewards.clone(), res.observations.clone()));
            s = res.state;
            if res.done {
                break;
            }
        }
        log
    };
    let a = run();
    assert_eq!(a.len(), 25);
    assert_eq!(a, run());
}

#[test]
fn recorder_writes_documented_columns() {
    let s = scenario_init("coop_comm", 1).unwrap();
    let mut a = idle(&s);
    a[0].comm = vec![1.0, 0.0, 0.0];
    let res = world_step(&s, &a).unwrap();
    let mut rec = TrajectoryRecorder::new(Vec::new());
    rec.record(0, &res.state, &a, &res.rewards).unwrap();
    rec.record(0, &res.state, &a, &res.rewards).unwrap();
    let text = String::from_utf8(rec.into_inner()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    let header: Vec<&str> = lines[0].split(',').collect();
    assert_eq!(&header[..4], &["episode", "step", "e0_x", "e0_y"]);
    // 5 entities × 4 + speaker message (3) + listener force (2) + 2 rewards
    assert_eq!(header.len(), 2 + 20 + 5 + 2);
    let row: Vec<f64> = lines[1].split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(row.len(), header.len());
    assert_eq!(row[2], res.state.entities[0].pos[0]);
    assert_eq!(row[row.len() - 1], res.rewards[1]);
}

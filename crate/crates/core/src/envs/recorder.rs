use std::io::Write;

use super::world::{AgentAction, WorldState};
use crate::{Error, Result};

/// Column order of trajectory files.
pub const TRAJECTORY_COLUMNS_DOC: &str = "episode,step, then for each entity e: e{e}_x,e{e}_y,e{e}_vx,e{e}_vy, \
then for each agent i and action component k: a{i}_{k}, then for each agent i: r{i}";

/// Writes one CSV line per environment step.
pub struct TrajectoryRecorder<W: Write> {
    out: W,
    header_written: bool,
}

impl<W: Write> TrajectoryRecorder<W> {
    pub fn new(out: W) -> Self {
        Self { out, header_written: false }
    }

    fn header(s: &WorldState, actions: &[AgentAction]) -> String {
        let mut cols = vec!["episode".to_string(), "step".to_string()];
        for e in 0..s.entities.len() {
            for f in ["x", "y", "vx", "vy"] {
                cols.push(format!("e{e}_{f}"));
            }
        }
        for (i, a) in actions.iter().enumerate() {
            let spec = s.action_spec(i);
            for k in 0..a.to_flat(spec).len() {
                cols.push(format!("a{i}_{k}"));
            }
        }
        for i in 0..s.num_agents {
            cols.push(format!("r{i}"));
        }
        cols.join(",")
    }

    /// Records the post-step state `s`, the actions that produced it and the rewards.
    pub fn record(&mut self, episode: usize, s: &WorldState, actions: &[AgentAction], rewards: &[f64]) -> Result<()> {
        let io = |e| Error::io("<trajectory>", e);
        if !self.header_written {
            writeln!(self.out, "{}", Self::header(s, actions)).map_err(io)?;
            self.header_written = true;
        }
        let mut fields = vec![episode.to_string(), s.step.to_string()];
        for e in &s.entities {
            fields.extend([e.pos[0], e.pos[1], e.vel[0], e.vel[1]].iter().map(|v| format!("{v:e}")));
        }
        for (i, a) in actions.iter().enumerate() {
            fields.extend(a.to_flat(s.action_spec(i)).iter().map(|v| format!("{v:e}")));
        }
        fields.extend(rewards.iter().map(|v| format!("{v:e}")));
        writeln!(self.out, "{}", fields.join(",")).map_err(io)
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}


use std::collections::VecDeque;

use crate::{Error, Result};

/// The `K` most recent observations of one agent, oldest first.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationWindow {
    len: usize,
    dim: usize,
    recent: VecDeque<Vec<f64>>,
}

impl ObservationWindow {
    pub fn new(len: usize, dim: usize) -> Self {
        assert!(len > 0, "window length must be positive");
        Self { len, dim, recent: VecDeque::with_capacity(len) }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.recent.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn clear(&mut self) {
        self.recent.clear();
    }

    pub fn push(&mut self, obs: &[f64]) -> Result<()> {
        if obs.len() != self.dim {
            return Err(Error::shape("window_push", format!("observation width {} but window holds {}", obs.len(), self.dim)));
        }
        if self.recent.len() == self.len {
            self.recent.pop_front();
        }
        self.recent.push_back(obs.to_vec());
        Ok(())
    }

    /// Exactly `K` rows, zero rows first while fewer than `K` have been pushed.
    pub fn materialize(&self) -> Vec<Vec<f64>> {
        let pad = self.len - self.recent.len();
        let mut out = vec![vec![0.0; self.dim]; pad];
        out.extend(self.recent.iter().cloned());
        out
    }
}

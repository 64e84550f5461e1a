use rand::Rng;

use crate::{Error, Result};

/// One stored step `(s, h, a, r, s′, h′)`. Windows are per agent, `K` rows
/// each, oldest first.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub obs: Vec<Vec<f64>>,
    pub window: Vec<Vec<Vec<f64>>>,
    pub actions: Vec<Vec<f64>>,
    pub rewards: Vec<f64>,
    pub next_obs: Vec<Vec<f64>>,
    pub next_window: Vec<Vec<Vec<f64>>>,
}

/// Per-agent widths every stored transition must match.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionShape {
    pub obs_dims: Vec<usize>,
    pub action_dims: Vec<usize>,
    pub window: usize,
}

impl TransitionShape {
    pub fn check(&self, t: &Transition) -> Result<()> {
        let n = self.obs_dims.len();
        let fail = |what: &str| Err(Error::shape("transition", what.to_string()));
        if [t.obs.len(), t.window.len(), t.actions.len(), t.rewards.len(), t.next_obs.len(), t.next_window.len()]
            .iter()
            .any(|&l| l != n)
        {
            return fail("agent count mismatch");
        }
        for i in 0..n {
            let d = self.obs_dims[i];
            if t.obs[i].len() != d || t.next_obs[i].len() != d {
                return fail("observation width mismatch");
            }
            if t.actions[i].len() != self.action_dims[i] {
                return fail("action width mismatch");
            }
            for w in [&t.window[i], &t.next_window[i]] {
                if w.len() != self.window || w.iter().any(|row| row.len() != d) {
                    return fail("window shape mismatch");
                }
            }
        }
        Ok(())
    }
}

/// Fixed-capacity FIFO of transitions with uniform sampling.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    shape: TransitionShape,
    capacity: usize,
    items: Vec<Transition>,
    cursor: usize,
}

impl ReplayBuffer {
    pub fn new(shape: TransitionShape, capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self { shape, capacity, items: Vec::new(), cursor: 0 }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn store(&mut self, t: Transition) -> Result<()> {
        self.shape.check(&t)?;
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.cursor] = t;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
        Ok(())
    }

    /// Contents from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        let split = if self.items.len() < self.capacity { 0 } else { self.cursor };
        self.items[split..].iter().chain(&self.items[..split])
    }

    /// `batch` indices drawn uniformly with replacement.
    pub fn sample_indices<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Vec<usize>> {
        if self.items.len() < batch || self.items.is_empty() {
            return Err(Error::Invalid(format!("replay holds {} transitions, batch needs {batch}", self.items.len())));
        }
        Ok((0..batch).map(|_| rng.random_range(0..self.items.len())).collect())
    }

    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Vec<&Transition>> {
        Ok(self.sample_indices(batch, rng)?.into_iter().map(|i| &self.items[i]).collect())
    }

    pub fn get(&self, index: usize) -> Option<&Transition> {
        self.items.get(index)
    }
}

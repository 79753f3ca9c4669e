use std::collections::VecDeque;

use crate::attacks::Perturbation;
use crate::rng::SplitMix64;

/// One replay record, optionally carrying the adversarial perturbation that
/// was computed for `s` when it was collected.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub s: Vec<f64>,
    pub a: usize,
    pub r: f64,
    pub s_next: Vec<f64>,
    pub done: bool,
    pub delta: Option<Perturbation>,
}

/// FIFO ring buffer with uniform sampling (with replacement).
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    items: VecDeque<Transition>,
    capacity: usize,
    replay_initial: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, replay_initial: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            items: VecDeque::with_capacity(capacity.min(1 << 16)),
            capacity,
            replay_initial,
        }
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn ready(&self) -> bool {
        self.items.len() >= self.replay_initial.max(1)
    }

    /// `None` until the buffer holds `replay_initial` transitions.
    pub fn sample(&self, batch: usize, rng: &mut SplitMix64) -> Option<Vec<&Transition>> {
        if !self.ready() {
            return None;
        }
        Some(
            (0..batch)
                .map(|_| &self.items[rng.below(self.items.len())])
                .collect(),
        )
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }
}

use super::{ObsVector, StepOutcome};
use crate::error::{BclError, Result};

pub const RIDGE_CELLS: usize = 12;
pub const RIDGE_HORIZON: usize = 32;
pub const RIDGE_DIM: usize = 24;
const SIGMA: f64 = 0.08;
const STEP_PENALTY: f64 = 0.02;
const GOAL_BONUS: f64 = 1.0;

pub const LEFT: usize = 0;
pub const RIGHT: usize = 1;

/// Gaussian bump centered at the agent's relative position.
///
/// `obs_j = exp(-(j/(d-1) - p/(N-1))^2 / (2 sigma^2))`.
pub fn encode_ridgewalk(p: usize) -> ObsVector {
    assert!(p < RIDGE_CELLS, "cell {p} out of range");
    let center = p as f64 / (RIDGE_CELLS - 1) as f64;
    let values = (0..RIDGE_DIM)
        .map(|j| {
            let u = j as f64 / (RIDGE_DIM - 1) as f64 - center;
            (-(u * u) / (2.0 * SIGMA * SIGMA)).exp()
        })
        .collect();
    ObsVector::new_unchecked(values)
}

/// A 12-cell chain. The agent starts at cell 0, pays 0.02 per step and
/// collects +1 on reaching the last cell, which ends the episode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RidgeWalkState {
    pub position: usize,
    pub steps: usize,
    pub done: bool,
}

impl RidgeWalkState {
    pub fn new() -> Self {
        Self {
            position: 0,
            steps: 0,
            done: false,
        }
    }

    pub fn observe(&self) -> ObsVector {
        encode_ridgewalk(self.position)
    }

    pub fn step(&mut self, action: usize) -> Result<StepOutcome> {
        if self.done {
            return Err(BclError::Protocol("step after episode end".into()));
        }
        self.position = match action {
            LEFT => self.position.saturating_sub(1),
            _ => (self.position + 1).min(RIDGE_CELLS - 1),
        };
        self.steps += 1;
        let mut reward = -STEP_PENALTY;
        if self.position == RIDGE_CELLS - 1 {
            reward += GOAL_BONUS;
            self.done = true;
        }
        if self.steps >= RIDGE_HORIZON {
            self.done = true;
        }
        Ok(StepOutcome {
            obs: self.observe(),
            reward,
            done: self.done,
        })
    }
}

impl Default for RidgeWalkState {
    fn default() -> Self {
        Self::new()
    }
}

use super::{ObsVector, StepOutcome};
use crate::error::{BclError, Result};
use crate::rng::SplitMix64;

pub const CATCH_SIZE: usize = 8;
pub const CATCH_BALLS: usize = 6;
const PADDLE_WIDTH: usize = 2;
const BLEED: f64 = 0.5;
/// Every ball takes `CATCH_SIZE` steps: seven falls plus one empty frame.
pub(crate) const CATCH_HORIZON: usize = CATCH_BALLS * CATCH_SIZE;

/// 8x8 catch. A ball spawns in row 0 at a column drawn from the state's
/// SplitMix64 stream (`next_u64() % 8`), falls one row per step, and is
/// resolved when it would enter the bottom row: +1 if a paddle cell sits
/// under it, -1 otherwise. The frame after a resolution shows an empty
/// board; the next ball spawns on the following step. Six balls per episode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatchState {
    /// `(row, col)` of the falling ball, if any.
    pub ball: Option<(usize, usize)>,
    /// Leftmost paddle column; the paddle covers `paddle..paddle + 2`.
    pub paddle: usize,
    pub balls_resolved: usize,
    pub steps: usize,
    pub done: bool,
    rng: SplitMix64,
}

pub const MOVE_LEFT: usize = 0;
pub const STAY: usize = 1;
pub const MOVE_RIGHT: usize = 2;

impl CatchState {
    pub fn new(seed: u64) -> Self {
        let mut rng = SplitMix64::new(seed);
        let col = rng.below(CATCH_SIZE);
        Self {
            ball: Some((0, col)),
            paddle: 3,
            balls_resolved: 0,
            steps: 0,
            done: false,
            rng,
        }
    }

    /// Build a state directly, e.g. for encoding tests.
    pub fn with_layout(ball: Option<(usize, usize)>, paddle: usize, seed: u64) -> Self {
        Self {
            ball,
            paddle,
            balls_resolved: 0,
            steps: 0,
            done: false,
            rng: SplitMix64::new(seed),
        }
    }

    pub fn observe(&self) -> ObsVector {
        encode_catchpixels(self)
    }

    pub fn step(&mut self, action: usize) -> Result<StepOutcome> {
        if self.done {
            return Err(BclError::Protocol("step after episode end".into()));
        }
        match action {
            MOVE_LEFT => self.paddle = self.paddle.saturating_sub(1),
            MOVE_RIGHT => self.paddle = (self.paddle + 1).min(CATCH_SIZE - PADDLE_WIDTH),
            _ => {}
        }
        self.steps += 1;
        let mut reward = 0.0;
        match self.ball {
            Some((row, col)) if row + 1 == CATCH_SIZE - 1 => {
                let caught = (self.paddle..self.paddle + PADDLE_WIDTH).contains(&col);
                reward = if caught { 1.0 } else { -1.0 };
                self.ball = None;
                self.balls_resolved += 1;
                if self.balls_resolved == CATCH_BALLS {
                    self.done = true;
                }
            }
            Some((row, col)) => self.ball = Some((row + 1, col)),
            None => self.ball = Some((0, self.rng.below(CATCH_SIZE))),
        }
        if self.steps >= CATCH_HORIZON {
            self.done = true;
        }
        Ok(StepOutcome {
            obs: self.observe(),
            reward,
            done: self.done,
        })
    }
}

/// Flattened row-major 8x8 grid: ball 1.0 with 0.5 in its horizontal
/// neighbours, paddle cells 1.0 in the bottom row, zero elsewhere.
pub fn encode_catchpixels(state: &CatchState) -> ObsVector {
    let mut grid = vec![0.0; CATCH_SIZE * CATCH_SIZE];
    if let Some((row, col)) = state.ball {
        let base = row * CATCH_SIZE;
        grid[base + col] = 1.0;
        if col > 0 {
            grid[base + col - 1] = BLEED;
        }
        if col + 1 < CATCH_SIZE {
            grid[base + col + 1] = BLEED;
        }
    }
    let bottom = (CATCH_SIZE - 1) * CATCH_SIZE;
    for c in state.paddle..state.paddle + PADDLE_WIDTH {
        grid[bottom + c] = 1.0;
    }
    ObsVector::new_unchecked(grid)
}

//! Deterministic toy environments with observations in `[0, 1]^d`.
//!
//! Both are small enough to train on a laptop in seconds, and both encode
//! position smoothly enough that an l∞ shift of about 25/255 can move the
//! apparent bump (or ball) by a cell.

mod catch;
mod ridgewalk;

use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{BclError, Result};

pub use catch::{
    encode_catchpixels, CatchState, CATCH_BALLS, CATCH_SIZE, MOVE_LEFT, MOVE_RIGHT, STAY,
};
pub use ridgewalk::{
    encode_ridgewalk, RidgeWalkState, LEFT as RIDGE_LEFT, RIDGE_CELLS, RIDGE_DIM, RIDGE_HORIZON,
    RIGHT as RIDGE_RIGHT,
};

/// An observation vector with every entry in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObsVector(Vec<f64>);

impl ObsVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
            return Err(BclError::Domain("observation outside [0, 1]".into()));
        }
        Ok(Self(values))
    }

    pub(crate) fn new_unchecked(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| (0.0..=1.0).contains(v)));
        Self(values)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ObsVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvKind {
    RidgeWalk,
    CatchPixels,
}

impl EnvKind {
    pub fn name(self) -> &'static str {
        match self {
            EnvKind::RidgeWalk => "ridgewalk",
            EnvKind::CatchPixels => "catchpixels",
        }
    }

    pub fn obs_dim(self) -> usize {
        match self {
            EnvKind::RidgeWalk => RIDGE_DIM,
            EnvKind::CatchPixels => CATCH_SIZE * CATCH_SIZE,
        }
    }

    pub fn n_actions(self) -> usize {
        match self {
            EnvKind::RidgeWalk => 2,
            EnvKind::CatchPixels => 3,
        }
    }

    pub fn horizon(self) -> usize {
        match self {
            EnvKind::RidgeWalk => RIDGE_HORIZON,
            EnvKind::CatchPixels => catch::CATCH_HORIZON,
        }
    }
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnvKind {
    type Err = BclError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ridgewalk" => Ok(EnvKind::RidgeWalk),
            "catchpixels" => Ok(EnvKind::CatchPixels),
            other => Err(BclError::config(
                "env.kind",
                format!("unknown environment kind `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub obs: ObsVector,
    pub reward: f64,
    pub done: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnvState {
    RidgeWalk(RidgeWalkState),
    CatchPixels(CatchState),
}

/// Start an episode. Deterministic in `(kind, seed)`.
pub fn reset(kind: EnvKind, seed: u64) -> (EnvState, ObsVector) {
    match kind {
        EnvKind::RidgeWalk => {
            let s = RidgeWalkState::new();
            let obs = s.observe();
            (EnvState::RidgeWalk(s), obs)
        }
        EnvKind::CatchPixels => {
            let s = CatchState::new(seed);
            let obs = s.observe();
            (EnvState::CatchPixels(s), obs)
        }
    }
}

/// String-keyed variant of [`reset`] for config and CLI callers.
pub fn reset_named(kind: &str, seed: u64) -> Result<(EnvState, ObsVector)> {
    Ok(reset(kind.parse()?, seed))
}

impl EnvState {
    pub fn kind(&self) -> EnvKind {
        match self {
            EnvState::RidgeWalk(_) => EnvKind::RidgeWalk,
            EnvState::CatchPixels(_) => EnvKind::CatchPixels,
        }
    }

    pub fn step(&mut self, action: usize) -> Result<StepOutcome> {
        let n = self.kind().n_actions();
        if action >= n {
            return Err(BclError::Protocol(format!(
                "action {action} outside the {n}-action set"
            )));
        }
        match self {
            EnvState::RidgeWalk(s) => s.step(action),
            EnvState::CatchPixels(s) => s.step(action),
        }
    }

    pub fn observe(&self) -> ObsVector {
        match self {
            EnvState::RidgeWalk(s) => s.observe(),
            EnvState::CatchPixels(s) => s.observe(),
        }
    }

    pub fn is_done(&self) -> bool {
        match self {
            EnvState::RidgeWalk(s) => s.done,
            EnvState::CatchPixels(s) => s.done,
        }
    }

    pub fn steps(&self) -> usize {
        match self {
            EnvState::RidgeWalk(s) => s.steps,
            EnvState::CatchPixels(s) => s.steps,
        }
    }
}

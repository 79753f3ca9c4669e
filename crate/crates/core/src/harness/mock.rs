//! Scripted trainer/evaluator pair for exercising the orchestrator without
//! any learning.

use serde::{Deserialize, Serialize};

use crate::curriculum::{Evaluator, Model, TrainRequest, Trainer};
use crate::error::Result;
use crate::rng::derive_seed;

/// A "model" that is robust to every budget up to `robust_to` and earns a
/// fixed nominal reward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockModel {
    pub robust_to: f64,
    pub nominal: f64,
    pub generation: u64,
}

impl Model for MockModel {
    fn fingerprint(&self) -> u64 {
        derive_seed(
            derive_seed(self.robust_to.to_bits(), self.nominal.to_bits()),
            self.generation,
        )
    }
}

/// Training up to `eps_hi` yields robustness up to `eps_hi + reach·increment`.
#[derive(Debug, Clone)]
pub struct MockTrainer {
    pub reach: usize,
    pub increment: f64,
    pub calls: Vec<(u64, TrainRequest)>,
}

impl MockTrainer {
    pub fn new(reach: usize, increment: f64) -> Self {
        Self {
            reach,
            increment,
            calls: Vec::new(),
        }
    }
}

impl Trainer<MockModel> for MockTrainer {
    fn train(&mut self, init: &MockModel, request: &TrainRequest) -> Result<MockModel> {
        self.calls.push((init.fingerprint(), request.clone()));
        Ok(MockModel {
            robust_to: request.eps_hi + self.reach as f64 * self.increment,
            nominal: init.nominal,
            generation: init.generation + 1,
        })
    }
}

/// Reward 1 where the model is robust, 0 elsewhere; nominal as stored.
#[derive(Debug, Clone, Default)]
pub struct MockEvaluator {
    pub calls: usize,
}

/// Budgets within this distance count as equal.
const TOLERANCE: f64 = 1e-9;

impl Evaluator<MockModel> for MockEvaluator {
    fn nominal(&mut self, model: &MockModel) -> Result<f64> {
        self.calls += 1;
        Ok(model.nominal)
    }

    fn adversarial(&mut self, model: &MockModel, epsilon: f64) -> Result<f64> {
        self.calls += 1;
        Ok(if epsilon <= model.robust_to + TOLERANCE {
            model.nominal
        } else {
            0.0
        })
    }
}

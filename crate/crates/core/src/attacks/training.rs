//! Perturbations generated during adversarial training.
//!
//! Both objectives are *minimized* by the attacker: the DQN one pushes the
//! actor's soft policy toward actions the target network rates poorly, the
//! PPO one toward the policy's own low-logit actions.

use serde::{Deserialize, Serialize};

use super::gradient::{expected_value_grad, pgd, ri_fgsm, self_expectation_grad};
use super::perturbation::Perturbation;
use crate::error::Result;
use crate::nn::Network;

/// One RI-FGSM descent step on `Softmax(Q_actor(x + δ)) · q_target`.
///
/// `q_target` is `Q_target(s, ·)` evaluated once on the clean observation.
pub fn train_perturb_dqn(
    q_actor: &Network,
    q_target: &[f64],
    x: &[f64],
    epsilon: f64,
    alpha: f64,
    seed: u64,
) -> Result<Perturbation> {
    ri_fgsm(x, epsilon, alpha, seed, |xp| {
        let (_, g) = expected_value_grad(q_actor, xp, q_target)?;
        Ok(g.into_iter().map(|v| -v).collect())
    })
}

/// Value of the DQN training objective at `x + δ`.
pub fn dqn_objective(q_actor: &Network, q_target: &[f64], x: &[f64], delta: &Perturbation) -> Result<f64> {
    Ok(expected_value_grad(q_actor, &delta.apply(x), q_target)?.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum PpoPerturbMethod {
    RiFgsm { alpha: f64 },
    Pgd { steps: usize, step_size: f64 },
}

impl Default for PpoPerturbMethod {
    fn default() -> Self {
        PpoPerturbMethod::RiFgsm { alpha: 0.375 }
    }
}

/// Descent on `Softmax(Logits(x + δ)) · Logits(x + δ)`; both factors move
/// with δ.
pub fn train_perturb_ppo(
    policy: &Network,
    x: &[f64],
    epsilon: f64,
    method: PpoPerturbMethod,
    seed: u64,
) -> Result<Perturbation> {
    match method {
        PpoPerturbMethod::RiFgsm { alpha } => ri_fgsm(x, epsilon, alpha, seed, |xp| {
            let (_, g) = self_expectation_grad(policy, xp)?;
            Ok(g.into_iter().map(|v| -v).collect())
        }),
        PpoPerturbMethod::Pgd { steps, step_size } => {
            let out = pgd(x, epsilon, steps, step_size, |xp| {
                let (v, g) = self_expectation_grad(policy, xp)?;
                Ok((-v, g.into_iter().map(|v| -v).collect()))
            })?;
            Ok(out.perturbation)
        }
    }
}

/// Value of the PPO training objective at `x + δ`.
pub fn ppo_objective(policy: &Network, x: &[f64], delta: &Perturbation) -> Result<f64> {
    Ok(self_expectation_grad(policy, &delta.apply(x))?.0)
}

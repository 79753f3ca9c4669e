use serde::{Deserialize, Serialize};

use super::scoring::standard_error;
use crate::attacks::{AttackKind, AttackSpec, EpsilonBudget};
use crate::envs::{reset, EnvKind};
use crate::error::{BclError, Result};
use crate::nn::{argmax, Network};
use crate::rng::derive_seed;

/// Hard cap on evaluation episode length.
pub const MAX_EPISODE_STEPS: usize = 10_000;

/// Rewards of one policy under one attack (or none).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model_id: String,
    pub epsilon: f64,
    /// `None` for the clean run.
    pub attack: Option<AttackKind>,
    pub episodes: usize,
    pub mean: f64,
    pub sem: f64,
    pub rewards: Vec<f64>,
    pub seed: u64,
}

/// Clean run, one report per attack, and the worst attack mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub nominal: EvalReport,
    pub attacks: Vec<EvalReport>,
    /// `R_adv`: the lowest attack mean, absent for an empty suite.
    pub worst: Option<f64>,
    /// SEM of the attack achieving `worst`.
    pub worst_sem: Option<f64>,
}

impl EvalSummary {
    pub fn adversarial_or_nominal(&self) -> f64 {
        self.worst.unwrap_or(self.nominal.mean)
    }
}

/// Undiscounted return of the greedy policy of `scores`, perturbing every
/// observation with `attack` first.
pub fn run_episode(
    scores: &Network,
    env: EnvKind,
    attack: Option<&AttackSpec>,
    episode_seed: u64,
) -> Result<f64> {
    let (mut state, obs) = reset(env, episode_seed);
    let mut obs = obs.into_inner();
    let cap = env.horizon().min(MAX_EPISODE_STEPS);
    let mut total = 0.0;
    for t in 0..cap {
        let x = match attack {
            Some(spec) => spec.perturb(scores, &obs, derive_seed(episode_seed, t as u64))?.apply(&obs),
            None => obs.clone(),
        };
        let a = argmax(&scores.forward(&x)?);
        let out = state.step(a)?;
        total += out.reward;
        if out.done {
            break;
        }
        obs = out.obs.into_inner();
    }
    Ok(total)
}

fn report(
    scores: &Network,
    env: EnvKind,
    attack: Option<&AttackSpec>,
    episodes: usize,
    seed: u64,
    model_id: &str,
) -> Result<EvalReport> {
    let rewards = (0..episodes as u64)
        .map(|e| run_episode(scores, env, attack, derive_seed(seed, e)))
        .collect::<Result<Vec<_>>>()?;
    let mean = rewards.iter().sum::<f64>() / episodes as f64;
    Ok(EvalReport {
        model_id: model_id.to_string(),
        epsilon: attack.map_or(0.0, |a| a.epsilon.value()),
        attack: attack.map(|a| a.kind),
        episodes,
        mean,
        sem: standard_error(&rewards),
        rewards,
        seed,
    })
}

/// Evaluation protocol: a clean run plus one run per attack, all over the
/// same episode seeds. `scores` is the Q-network (DQN) or the policy logits
/// (PPO); actions are always its lowest-index argmax.
pub fn evaluate(
    scores: &Network,
    env: EnvKind,
    suite: &[AttackSpec],
    episodes: usize,
    seed: u64,
    model_id: &str,
) -> Result<EvalSummary> {
    if episodes == 0 {
        return Err(BclError::config("eval.episodes", "episodes must be >= 1"));
    }
    for spec in suite {
        spec.validate()?;
    }
    let nominal = report(scores, env, None, episodes, seed, model_id)?;
    let attacks = suite
        .iter()
        .map(|spec| report(scores, env, Some(spec), episodes, seed, model_id))
        .collect::<Result<Vec<_>>>()?;
    let worst_report = attacks
        .iter()
        .fold(None::<&EvalReport>, |acc, r| match acc {
            Some(b) if b.mean <= r.mean => Some(b),
            _ => Some(r),
        });
    Ok(EvalSummary {
        worst: worst_report.map(|r| r.mean),
        worst_sem: worst_report.map(|r| r.sem),
        nominal,
        attacks,
    })
}

/// Attack settings shared by every evaluation of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteConfig {
    pub attacks: Vec<AttackKind>,
    pub steps: usize,
    pub step_size: f64,
    pub alpha: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            attacks: AttackKind::ALL.to_vec(),
            steps: 30,
            step_size: 0.1,
            alpha: 0.375,
            restarts: 1000,
            seed: 0,
        }
    }
}

impl SuiteConfig {
    pub fn pgd_only() -> Self {
        Self {
            attacks: vec![AttackKind::Pgd],
            ..Self::default()
        }
    }

    /// Concrete specs at `epsilon`.
    pub fn at(&self, epsilon: f64) -> Result<Vec<AttackSpec>> {
        let eps = EpsilonBudget::new(epsilon)?;
        let specs: Vec<AttackSpec> = self
            .attacks
            .iter()
            .map(|kind| AttackSpec {
                kind: *kind,
                epsilon: eps,
                steps: self.steps,
                step_size: self.step_size,
                alpha: self.alpha,
                restarts: self.restarts,
                seed: self.seed,
            })
            .collect();
        for s in &specs {
            s.validate()?;
        }
        Ok(specs)
    }
}

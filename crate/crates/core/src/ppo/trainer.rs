use serde::{Deserialize, Serialize};

use super::loss::{ppo_total_loss, LossWeights};
use super::rollout::{compute_advantages, normalize_advantages, RolloutStep};
use crate::attacks::{pgd_untargeted, train_perturb_ppo, Perturbation, PpoPerturbMethod};
use crate::dqn::{KappaSchedule, LossMode};
use crate::envs::{reset, EnvKind};
use crate::error::{BclError, Result};
use crate::nn::{argmax, softmax, AdamState, Network, NetworkSpec};
use crate::rng::{derive_seed, SplitMix64};

/// Separate policy (logits) and value networks.
#[derive(Debug, Clone, PartialEq)]
pub struct PpoModel {
    pub policy: Network,
    pub value: Network,
}

impl PpoModel {
    /// Two ReLU MLPs with the given hidden widths.
    pub fn glorot(env: EnvKind, hidden: &[usize], seed: u64) -> Result<Self> {
        let mut sizes = vec![env.obs_dim()];
        sizes.extend_from_slice(hidden);
        let mut p = sizes.clone();
        p.push(env.n_actions());
        let mut v = sizes;
        v.push(1);
        Ok(Self {
            policy: Network::glorot(NetworkSpec::mlp(p), derive_seed(seed, 1))?,
            value: Network::glorot(NetworkSpec::mlp(v), derive_seed(seed, 2))?,
        })
    }

    pub fn greedy_action(&self, obs: &[f64]) -> Result<usize> {
        Ok(argmax(&self.policy.forward(obs)?))
    }

    pub fn fingerprint(&self) -> u64 {
        self.policy.params.fingerprint() ^ self.value.params.fingerprint().rotate_left(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PpoConfig {
    /// Clip range η.
    pub clip: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub frames: usize,
    pub rollout_len: usize,
    pub epochs: usize,
    pub minibatch_size: usize,
    pub learning_rate: f64,
    pub kappa: KappaSchedule,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub loss_mode: LossMode,
    pub perturbation: PpoPerturbMethod,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            clip: 0.2,
            gamma: 0.99,
            gae_lambda: 0.95,
            frames: 40_000,
            rollout_len: 256,
            epochs: 4,
            minibatch_size: 64,
            learning_rate: 1e-3,
            kappa: KappaSchedule::default(),
            value_coef: 0.5,
            entropy_coef: 0.01,
            loss_mode: LossMode::Standard,
            perturbation: PpoPerturbMethod::default(),
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.clip > 0.0) {
            return Err(BclError::config("trainer.ppo.clip", "η must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return Err(BclError::config("trainer.ppo.gae_lambda", "λ must lie in [0, 1]"));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(BclError::config("trainer.ppo.gamma", "gamma must lie in [0, 1)"));
        }
        if self.frames == 0 || self.rollout_len == 0 || self.epochs == 0 || self.minibatch_size == 0 {
            return Err(BclError::config(
                "trainer.ppo",
                "frames, rollout_len, epochs and minibatch_size must be > 0",
            ));
        }
        if self.loss_mode == LossMode::Radial {
            return Err(BclError::config(
                "trainer.ppo.loss_mode",
                "the radial loss is only defined for DQN",
            ));
        }
        self.kappa.validate()
    }
}

/// PGD evaluation attack for policies: cross-entropy against the one-hot
/// greedy action of the clean logits.
pub fn ppo_pgd_eval_attack(
    policy: &Network,
    x: &[f64],
    epsilon: f64,
    steps: usize,
    step_size: f64,
) -> Result<Perturbation> {
    let a = argmax(&policy.forward(x)?);
    pgd_untargeted(policy, x, epsilon, steps, step_size, a)
}

fn sample(p: &[f64], rng: &mut SplitMix64) -> usize {
    let u = rng.next_f64();
    let mut acc = 0.0;
    for (i, pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            return i;
        }
    }
    p.len() - 1
}

/// Train one curriculum phase with PPO. Budgets ramp linearly over frames;
/// in AT mode each rollout state gets one δ against the behavior policy,
/// reused across the update epochs.
pub fn train_ppo_phase(
    init: &PpoModel,
    env: EnvKind,
    eps_lo: f64,
    eps_hi: f64,
    config: &PpoConfig,
    seed: u64,
) -> Result<PpoModel> {
    config.validate()?;
    if !(0.0 <= eps_lo && eps_lo <= eps_hi) {
        return Err(BclError::Domain(format!(
            "phase budgets must satisfy 0 <= lo <= hi, got [{eps_lo}, {eps_hi}]"
        )));
    }
    if init.policy.input_dim() != env.obs_dim() || init.policy.output_dim() != env.n_actions() {
        return Err(BclError::Shape(format!("policy does not fit environment {env}")));
    }
    let mut root = SplitMix64::new(seed);
    let mut action_rng = root.fork();
    let mut shuffle_rng = root.fork();
    let episode_seed_base = root.next_u64();
    let attack_seed_base = root.next_u64();

    let mut model = init.clone();
    let mut adam_pi = AdamState::new(&model.policy.params, config.learning_rate);
    let mut adam_v = AdamState::new(&model.value.params, config.learning_rate);
    let use_adv = config.loss_mode == LossMode::At;
    let denom = config.frames.saturating_sub(1).max(1) as f64;

    let mut episodes = 0u64;
    let (mut state, obs) = reset(env, derive_seed(episode_seed_base, 0));
    let mut obs = obs.into_inner();
    let mut frame = 0usize;
    while frame < config.frames {
        let start_progress = frame as f64 / denom;
        let len = config.rollout_len.min(config.frames - frame);
        let mut steps = Vec::with_capacity(len);
        for _ in 0..len {
            let progress = frame as f64 / denom;
            let eps_now = eps_lo + (eps_hi - eps_lo) * progress;
            let logits = model.policy.forward(&obs)?;
            let value = model.value.forward(&obs)?[0];
            let a = sample(&softmax(&logits), &mut action_rng);
            let delta = if use_adv {
                Some(train_perturb_ppo(
                    &model.policy,
                    &obs,
                    eps_now,
                    config.perturbation,
                    derive_seed(attack_seed_base, frame as u64),
                )?)
            } else {
                None
            };
            let out = state.step(a)?;
            let next = out.obs.into_inner();
            steps.push(RolloutStep {
                s: std::mem::replace(&mut obs, next),
                a,
                reward: out.reward,
                logits,
                value,
                done: out.done,
                delta,
            });
            if out.done {
                episodes += 1;
                let (s, o) = reset(env, derive_seed(episode_seed_base, episodes));
                state = s;
                obs = o.into_inner();
            }
            frame += 1;
        }
        let last_value = model.value.forward(&obs)?[0];
        let rewards: Vec<f64> = steps.iter().map(|s| s.reward).collect();
        let values: Vec<f64> = steps.iter().map(|s| s.value).collect();
        let dones: Vec<bool> = steps.iter().map(|s| s.done).collect();
        let (mut adv, returns) = compute_advantages(
            &rewards,
            &values,
            &dones,
            last_value,
            config.gamma,
            config.gae_lambda,
        )?;
        normalize_advantages(&mut adv);

        let weights = LossWeights {
            kappa: config.kappa.at(start_progress),
            value_coef: config.value_coef,
            entropy_coef: config.entropy_coef,
        };
        let mut order: Vec<usize> = (0..steps.len()).collect();
        for _ in 0..config.epochs {
            for i in (1..order.len()).rev() {
                order.swap(i, shuffle_rng.below(i + 1));
            }
            for chunk in order.chunks(config.minibatch_size) {
                let mb: Vec<&RolloutStep> = chunk.iter().map(|&i| &steps[i]).collect();
                let a: Vec<f64> = chunk.iter().map(|&i| adv[i]).collect();
                let r: Vec<f64> = chunk.iter().map(|&i| returns[i]).collect();
                let lg = ppo_total_loss(
                    &model.policy,
                    &model.value,
                    &mb,
                    &a,
                    &r,
                    config.clip,
                    weights,
                    use_adv,
                )?;
                if !lg.loss.is_finite() {
                    return Err(BclError::Numeric(format!("non-finite PPO loss at frame {frame}")));
                }
                adam_pi.apply(&mut model.policy.params, &lg.policy_grads)?;
                adam_v.apply(&mut model.value.params, &lg.value_grads)?;
            }
        }
    }
    Ok(model)
}

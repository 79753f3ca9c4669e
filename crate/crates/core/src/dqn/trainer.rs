use serde::{Deserialize, Serialize};

use super::loss::{blended_loss, LossMode};
use super::replay::{ReplayBuffer, Transition};
use crate::attacks::train_perturb_dqn;
use crate::envs::{reset, EnvKind};
use crate::error::{BclError, Result};
use crate::nn::{argmax, AdamState, Network, DEFAULT_LEARNING_RATE};
use crate::rng::{derive_seed, SplitMix64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaKind {
    Constant,
    Linear,
}

/// Weight of the standard loss within a phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaSchedule {
    pub kind: KappaKind,
    #[serde(default = "one")]
    pub start: f64,
    #[serde(default = "half")]
    pub end: f64,
    #[serde(default = "point_eight")]
    pub value: f64,
}

fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn point_eight() -> f64 {
    0.8
}

impl Default for KappaSchedule {
    fn default() -> Self {
        Self::linear(1.0, 0.5)
    }
}

impl KappaSchedule {
    pub fn linear(start: f64, end: f64) -> Self {
        Self {
            kind: KappaKind::Linear,
            start,
            end,
            value: 0.8,
        }
    }

    pub fn constant(value: f64) -> Self {
        Self {
            kind: KappaKind::Constant,
            start: 1.0,
            end: 0.5,
            value,
        }
    }

    /// κ at phase progress `p ∈ [0, 1]`.
    pub fn at(&self, progress: f64) -> f64 {
        match self.kind {
            KappaKind::Constant => self.value,
            KappaKind::Linear => self.start + (self.end - self.start) * progress.clamp(0.0, 1.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| (0.0..=1.0).contains(&v);
        if !(ok(self.start) && ok(self.end) && ok(self.value)) {
            return Err(BclError::config("kappa", "kappa values must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// ε-greedy exploration decaying linearly over the first `fraction` of the
/// phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exploration {
    pub start: f64,
    pub end: f64,
    pub fraction: f64,
}

impl Default for Exploration {
    fn default() -> Self {
        Self {
            start: 1.0,
            end: 0.02,
            fraction: 0.3,
        }
    }
}

impl Exploration {
    pub fn at(&self, progress: f64) -> f64 {
        if self.fraction <= 0.0 {
            return self.end;
        }
        let f = (progress / self.fraction).clamp(0.0, 1.0);
        self.start + (self.end - self.start) * f
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DqnTrainerConfig {
    pub gamma: f64,
    pub learning_rate: f64,
    pub frames: usize,
    /// Hard target sync period, in gradient steps.
    pub target_sync: usize,
    pub exploration: Exploration,
    pub kappa: KappaSchedule,
    pub loss_mode: LossMode,
    pub buffer_capacity: usize,
    pub replay_initial: usize,
    pub batch_size: usize,
    /// RI-FGSM step used for training perturbations.
    pub rifgsm_alpha: f64,
    pub eval_episodes: usize,
}

impl Default for DqnTrainerConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            learning_rate: DEFAULT_LEARNING_RATE,
            frames: 40_000,
            target_sync: 1_000,
            exploration: Exploration::default(),
            kappa: KappaSchedule::default(),
            loss_mode: LossMode::Standard,
            buffer_capacity: 50_000,
            replay_initial: 256,
            batch_size: 128,
            rifgsm_alpha: 0.375,
            eval_episodes: 20,
        }
    }
}

impl DqnTrainerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(BclError::config("trainer.dqn.gamma", "gamma must lie in [0, 1)"));
        }
        if self.frames == 0 {
            return Err(BclError::config("trainer.dqn.frames", "frames must be > 0"));
        }
        if self.batch_size == 0 || self.buffer_capacity == 0 || self.target_sync == 0 {
            return Err(BclError::config(
                "trainer.dqn",
                "batch_size, buffer_capacity and target_sync must be > 0",
            ));
        }
        if !(self.learning_rate > 0.0) {
            return Err(BclError::config("trainer.dqn.learning_rate", "must be > 0"));
        }
        self.kappa.validate()
    }
}

/// Lowest-index argmax of the actor's Q-values.
pub fn greedy_action(actor: &Network, obs: &[f64]) -> Result<usize> {
    Ok(argmax(&actor.forward(obs)?))
}

/// Counters reported alongside the trained network.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseStats {
    pub frames: usize,
    pub gradient_steps: usize,
    pub episodes: usize,
    pub last_loss: f64,
}

/// Train one curriculum phase starting from `init`.
///
/// The training budget ramps linearly from `eps_lo` to `eps_hi` over the
/// phase. In AT mode every collected transition stores a perturbation found
/// at the budget in force; in the other modes δ is left empty. One gradient
/// step per environment step once the buffer holds `replay_initial`
/// transitions. Fully determined by `(init, env, eps_lo, eps_hi, config,
/// seed)`.
pub fn train_dqn_phase(
    init: &Network,
    env: EnvKind,
    eps_lo: f64,
    eps_hi: f64,
    config: &DqnTrainerConfig,
    seed: u64,
) -> Result<Network> {
    Ok(train_dqn_phase_with_stats(init, env, eps_lo, eps_hi, config, seed)?.0)
}

pub fn train_dqn_phase_with_stats(
    init: &Network,
    env: EnvKind,
    eps_lo: f64,
    eps_hi: f64,
    config: &DqnTrainerConfig,
    seed: u64,
) -> Result<(Network, PhaseStats)> {
    config.validate()?;
    if !(0.0 <= eps_lo && eps_lo <= eps_hi) {
        return Err(BclError::Domain(format!(
            "phase budgets must satisfy 0 <= lo <= hi, got [{eps_lo}, {eps_hi}]"
        )));
    }
    if init.input_dim() != env.obs_dim() || init.output_dim() != env.n_actions() {
        return Err(BclError::Shape(format!(
            "network {:?} does not fit environment {env}",
            init.spec.layer_sizes
        )));
    }
    let mut root = SplitMix64::new(seed);
    let mut explore_rng = root.fork();
    let mut replay_rng = root.fork();
    let episode_seed_base = root.next_u64();
    let attack_seed_base = root.next_u64();

    let mut actor = init.clone();
    let mut target = init.clone();
    let mut adam = AdamState::new(&actor.params, config.learning_rate);
    let mut buffer = ReplayBuffer::new(config.buffer_capacity, config.replay_initial);
    let mut stats = PhaseStats::default();

    let n_actions = env.n_actions();
    let (mut state, obs) = reset(env, derive_seed(episode_seed_base, 0));
    let mut obs = obs.into_inner();
    let denom = config.frames.saturating_sub(1).max(1) as f64;

    for frame in 0..config.frames {
        let progress = frame as f64 / denom;
        let eps_now = eps_lo + (eps_hi - eps_lo) * progress;

        let action = if explore_rng.next_f64() < config.exploration.at(progress) {
            explore_rng.below(n_actions)
        } else {
            greedy_action(&actor, &obs)?
        };
        let out = state.step(action)?;

        let delta = if config.loss_mode == LossMode::At {
            let q_target = target.forward(&obs)?;
            Some(train_perturb_dqn(
                &actor,
                &q_target,
                &obs,
                eps_now,
                config.rifgsm_alpha,
                derive_seed(attack_seed_base, frame as u64),
            )?)
        } else {
            None
        };
        let next = out.obs.into_inner();
        buffer.push(Transition {
            s: std::mem::replace(&mut obs, next.clone()),
            a: action,
            r: out.reward,
            s_next: next,
            done: out.done,
            delta,
        });
        if out.done {
            stats.episodes += 1;
            let (s, o) = reset(env, derive_seed(episode_seed_base, stats.episodes as u64));
            state = s;
            obs = o.into_inner();
        }

        if let Some(batch) = buffer.sample(config.batch_size, &mut replay_rng) {
            let kappa = config.kappa.at(progress);
            let lg = blended_loss(
                &actor,
                &target,
                &batch,
                config.loss_mode,
                eps_now,
                config.gamma,
                kappa,
                1.0 - kappa,
            )?;
            if !lg.loss.is_finite() || !lg.grads.is_finite() {
                return Err(BclError::Numeric(format!(
                    "non-finite DQN loss at frame {frame}"
                )));
            }
            adam.apply(&mut actor.params, &lg.grads)?;
            stats.gradient_steps += 1;
            stats.last_loss = lg.loss;
            if stats.gradient_steps % config.target_sync == 0 {
                target = actor.clone();
            }
        }
        stats.frames += 1;
    }
    if !actor.params.is_finite() {
        return Err(BclError::Numeric("non-finite parameters after phase".into()));
    }
    Ok((actor, stats))
}

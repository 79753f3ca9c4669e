//! Observation attacks: FGSM, RI-FGSM, PGD, multi-restart RI-FGSM, and the
//! perturbation objectives used during adversarial training.
//!
//! Every attack clips to the l∞ ball first and then to the observation box
//! `[0, 1]^d`; since the ball is centered on a feasible point the result
//! satisfies both constraints.

mod budget;
mod gradient;
mod perturbation;
mod training;

use serde::{Deserialize, Serialize};

use crate::error::{BclError, Result};
use crate::nn::{argmax, Network};
use crate::rng::derive_seed;

pub use budget::{budget_serde, EpsilonBudget};
pub use gradient::{
    cross_entropy_grad, expected_value_grad, fgsm, multi_restart, pgd, pgd_untargeted,
    pgd_untargeted_traced, random_start, ri_fgsm, ri_fgsm_untargeted, self_expectation_grad,
    PgdOutcome, RestartMode,
};
pub use perturbation::{project, Perturbation};
pub use training::{
    dqn_objective, ppo_objective, train_perturb_dqn, train_perturb_ppo, PpoPerturbMethod,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    Pgd,
    Rifgsm,
    RifgsmMulti,
    RifgsmMultiT,
}

impl AttackKind {
    pub fn name(self) -> &'static str {
        match self {
            AttackKind::Pgd => "pgd",
            AttackKind::Rifgsm => "rifgsm",
            AttackKind::RifgsmMulti => "rifgsm_multi",
            AttackKind::RifgsmMultiT => "rifgsm_multi_t",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "pgd" => Ok(AttackKind::Pgd),
            "rifgsm" => Ok(AttackKind::Rifgsm),
            "rifgsm_multi" => Ok(AttackKind::RifgsmMulti),
            "rifgsm_multi_t" => Ok(AttackKind::RifgsmMultiT),
            other => Err(BclError::config("attack.kind", format!("unknown attack `{other}`"))),
        }
    }

    pub const ALL: [AttackKind; 4] = [
        AttackKind::Pgd,
        AttackKind::Rifgsm,
        AttackKind::RifgsmMulti,
        AttackKind::RifgsmMultiT,
    ];
}

fn default_steps() -> usize {
    30
}
fn default_step_size() -> f64 {
    0.1
}
fn default_alpha() -> f64 {
    0.375
}
fn default_restarts() -> usize {
    1000
}

/// Evaluation attack configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackSpec {
    pub kind: AttackKind,
    pub epsilon: EpsilonBudget,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_step_size")]
    pub step_size: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default)]
    pub seed: u64,
}

impl AttackSpec {
    pub fn new(kind: AttackKind, epsilon: EpsilonBudget) -> Self {
        Self {
            kind,
            epsilon,
            steps: default_steps(),
            step_size: default_step_size(),
            alpha: default_alpha(),
            restarts: default_restarts(),
            seed: 0,
        }
    }

    /// The four-attack evaluation suite at one budget.
    pub fn suite(epsilon: EpsilonBudget) -> Vec<AttackSpec> {
        AttackKind::ALL
            .iter()
            .map(|k| AttackSpec::new(*k, epsilon))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps < 1 {
            return Err(BclError::config("attack.steps", "steps must be >= 1"));
        }
        if self.restarts < 1 {
            return Err(BclError::config("attack.restarts", "restarts must be >= 1"));
        }
        if !(self.step_size > 0.0) {
            return Err(BclError::config("attack.step_size", "step size must be > 0"));
        }
        if !(self.alpha > 0.0) {
            return Err(BclError::config("attack.alpha", "alpha must be > 0"));
        }
        Ok(())
    }

    /// Perturb one observation. `salt` distinguishes calls within an episode
    /// so stochastic attacks draw fresh but reproducible randomness.
    pub fn perturb(&self, net: &Network, x: &[f64], salt: u64) -> Result<Perturbation> {
        let eps = self.epsilon.value();
        let clean = net.forward(x)?;
        let clean_action = argmax(&clean);
        let seed = derive_seed(self.seed, salt);
        match self.kind {
            AttackKind::Pgd => pgd_untargeted(net, x, eps, self.steps, self.step_size, clean_action),
            AttackKind::Rifgsm => ri_fgsm_untargeted(net, x, eps, self.alpha, clean_action, seed),
            AttackKind::RifgsmMulti => multi_restart(
                net,
                x,
                eps,
                self.alpha,
                self.restarts,
                RestartMode::FirstFlip,
                &clean,
                seed,
            ),
            AttackKind::RifgsmMultiT => multi_restart(
                net,
                x,
                eps,
                self.alpha,
                self.restarts,
                RestartMode::LowestQ,
                &clean,
                seed,
            ),
        }
    }
}

//! PPO with separate policy and value networks, a clipped surrogate, GAE
//! advantages and the two-mix adversarial surrogate.

mod loss;
mod rollout;
mod trainer;

pub use loss::{
    clipped_surrogate, entropy_bonus, ppo_adv_loss, ppo_standard_loss, ppo_total_loss,
    tilde_policies, value_loss, LossWeights, PpoLossGrad,
};
pub use rollout::{compute_advantages, normalize_advantages, RolloutBatch, RolloutStep};
pub use trainer::{ppo_pgd_eval_attack, train_ppo_phase, PpoConfig, PpoModel};

//! Double/dueling DQN with standard, adversarial-example (AT) and
//! interval-bound (RADIAL) losses.

mod loss;
mod replay;
mod trainer;

pub use loss::{
    adv_loss_at, adv_loss_radial, blended_loss, ly_terms, standard_loss, td_target, total_loss,
    LossGrad, LossMode,
};
pub use replay::{ReplayBuffer, Transition};
pub use trainer::{
    greedy_action, train_dqn_phase, train_dqn_phase_with_stats, DqnTrainerConfig, Exploration,
    KappaKind, KappaSchedule, PhaseStats,
};

//! Bootstrapped opportunistic adversarial curriculum learning (BCL) for
//! small Q-learning and policy-gradient agents.
//!
//! The crate is organised bottom-up:
//!
//! - [`nn`]: dense networks with exact gradients, Adam, a dueling head and
//!   interval bound propagation.
//! - [`envs`]: two deterministic toy environments with `[0, 1]^d`
//!   observations.
//! - [`attacks`]: FGSM, RI-FGSM, PGD, multi-restart RI-FGSM and the
//!   training-time perturbation objectives.
//! - [`dqn`] and [`ppo`]: trainers with standard, adversarial-example and
//!   (DQN only) interval-bound losses.
//! - [`curriculum`]: the BCL orchestrator and its variants.
//! - [`harness`]: evaluation protocol, scoring, checkpoints, the run ledger
//!   and the experiment driver behind the `bcl` binary.

pub mod attacks;
pub mod curriculum;
pub mod dqn;
pub mod envs;
pub mod harness;
pub mod error;
pub mod nn;
pub mod ppo;
pub mod rng;

pub use error::{BclError, Result};

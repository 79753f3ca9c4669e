//! The BCL orchestrator.
//!
//! A run walks an increasing list of budgets. Each phase trains up to `K`
//! candidates from the best model so far, keeps the one with the highest
//! efficacy score, then asks [`choose_next`] which budget to train next.
//! Training and evaluation are supplied by the caller through [`Trainer`]
//! and [`Evaluator`], which is how the same loop drives DQN, PPO and the
//! scripted mocks in the tests.

mod probe;
mod run;
mod schedule;

use serde::{Deserialize, Serialize};

use crate::attacks::budget_serde;
use crate::dqn::LossMode;
use crate::error::{BclError, Result};
use crate::nn::Network;
use crate::ppo::PpoModel;

pub use probe::{choose_next, eval_robust, NextChoice, Probe, SkipPolicy, ThresholdPolicy};
pub use run::{bcl_run, radial_curriculum_run, radial_plus_at_run, PhaseLog, RunOutcome};
pub use schedule::{make_curriculum, Curriculum};

/// Anything the orchestrator can bootstrap from. The fingerprint identifies
/// parameters exactly enough to memoize evaluations and to check that every
/// run of a phase started from the same model.
pub trait Model: Clone {
    fn fingerprint(&self) -> u64;
}

impl Model for Network {
    fn fingerprint(&self) -> u64 {
        self.params.fingerprint()
    }
}

impl Model for PpoModel {
    fn fingerprint(&self) -> u64 {
        PpoModel::fingerprint(self)
    }
}

/// What a phase asks the trainer for: ramp the training budget from
/// `eps_lo` to `eps_hi` using `loss_mode`, seeded by `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRequest {
    pub eps_lo: f64,
    pub eps_hi: f64,
    pub seed: u64,
    pub loss_mode: LossMode,
    pub phase: usize,
    pub run: usize,
}

pub trait Trainer<M> {
    /// A [`BclError::Numeric`] marks the run as failed; other errors abort
    /// the experiment.
    fn train(&mut self, init: &M, request: &TrainRequest) -> Result<M>;
}

impl<M, F> Trainer<M> for F
where
    F: FnMut(&M, &TrainRequest) -> Result<M>,
{
    fn train(&mut self, init: &M, request: &TrainRequest) -> Result<M> {
        self(init, request)
    }
}

/// Mean rewards of a model, with and without attack.
pub trait Evaluator<M> {
    fn nominal(&mut self, model: &M) -> Result<f64>;
    fn adversarial(&mut self, model: &M, epsilon: f64) -> Result<f64>;
}

/// `V_k = R_nominal + ½ (R_adv(ε_i) + R_adv(ε_{i−1}))`.
pub fn phase_eval_score(r_nominal: f64, r_adv_i: f64, r_adv_prev: f64) -> f64 {
    r_nominal + 0.5 * (r_adv_i + r_adv_prev)
}

/// `R_nominal + ⅓ Σ R_adv` over three reporting budgets; the score used to
/// rank independent runs and curriculum-path checkpoints.
pub fn model_score(r_nominal: f64, adv_rewards: &[f64; 3]) -> f64 {
    r_nominal + adv_rewards.iter().sum::<f64>() / 3.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    At,
    Ncl,
    #[serde(alias = "bcl_c")]
    BclC,
    #[serde(alias = "bcl_mos")]
    BclMos,
    #[serde(alias = "bcl_radial")]
    BclRadial,
    #[serde(alias = "bcl_radial_at")]
    BclRadialAt,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::At,
        Variant::Ncl,
        Variant::BclC,
        Variant::BclMos,
        Variant::BclRadial,
        Variant::BclRadialAt,
    ];

    /// Name as used in config files, on the command line and in the ledger.
    pub fn name(self) -> &'static str {
        match self {
            Variant::At => "at",
            Variant::Ncl => "ncl",
            Variant::BclC => "bcl-c",
            Variant::BclMos => "bcl-mos",
            Variant::BclRadial => "bcl-radial",
            Variant::BclRadialAt => "bcl-radial-at",
        }
    }

    /// Accepts both `bcl-mos` and `bcl_mos`.
    pub fn parse(s: &str) -> Result<Self> {
        let norm = s.replace('_', "-");
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == norm)
            .ok_or_else(|| BclError::config("curriculum.variant", format!("unknown variant `{s}`")))
    }
}

/// Orchestrator settings shared by all variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BclConfig {
    pub variant: Variant,
    pub k: usize,
    pub k_min: usize,
    /// Consecutive below-threshold phases that stop a RADIAL curriculum.
    pub m: usize,
    #[serde(deserialize_with = "budget_serde::one")]
    pub eps0: f64,
    #[serde(deserialize_with = "budget_serde::one")]
    pub target: f64,
    #[serde(deserialize_with = "budget_serde::one")]
    pub increment: f64,
    pub thresholds: ThresholdPolicy,
    pub base_seed: u64,
    /// Ramp the budget from `ε_{l−1}` to `ε_l` inside each phase.
    pub smooth: bool,
    /// Stage-two base of RADIAL+AT, in increments below the stage-one stop.
    pub at_restart_increments: usize,
    /// Skip policy of the AT stage of RADIAL+AT.
    pub at_stage_policy: SkipPolicy,
    /// Budgets behind [`model_score`] when ranking curriculum-path models.
    #[serde(deserialize_with = "budget_serde::three")]
    pub score_budgets: [f64; 3],
}

impl Default for BclConfig {
    fn default() -> Self {
        Self {
            variant: Variant::BclMos,
            k: 3,
            k_min: 1,
            m: 2,
            eps0: 0.0,
            target: 25.0 / 255.0,
            increment: 1.0 / 255.0,
            thresholds: ThresholdPolicy::new(0.7, 0.5),
            base_seed: 0,
            smooth: true,
            at_restart_increments: 2,
            at_stage_policy: SkipPolicy::AlwaysNext,
            score_budgets: [5.0 / 255.0, 15.0 / 255.0, 25.0 / 255.0],
        }
    }
}

impl BclConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_min < 1 || self.k_min > self.k {
            return Err(BclError::config("curriculum.k_min", "need 1 <= k_min <= k"));
        }
        if self.m < 1 {
            return Err(BclError::config("curriculum.m", "m must be >= 1"));
        }
        let t = &self.thresholds;
        if !(t.nominal.is_finite() && t.adv.is_finite() && t.efficacy().is_finite()) {
            return Err(BclError::config("curriculum.thresholds", "thresholds must be finite"));
        }
        make_curriculum(self.eps0, self.target, self.increment)?;
        Ok(())
    }

    /// `(curriculum, K, K_min, skip policy, smoothing)` after applying the
    /// variant's reductions. Only meaningful for the non-RADIAL variants.
    pub fn plan(&self) -> Result<(Curriculum, usize, usize, SkipPolicy, bool)> {
        Ok(match self.variant {
            Variant::At => (Curriculum::singleton(self.eps0, self.target)?, 1, 1, SkipPolicy::AlwaysNext, false),
            Variant::Ncl => (self.curriculum()?, 1, 1, SkipPolicy::AlwaysNext, self.smooth),
            Variant::BclC => (self.curriculum()?, self.k, self.k, SkipPolicy::AlwaysNext, self.smooth),
            Variant::BclMos | Variant::BclRadial | Variant::BclRadialAt => {
                (self.curriculum()?, self.k, self.k_min, SkipPolicy::MaxSkip, self.smooth)
            }
        })
    }

    pub fn curriculum(&self) -> Result<Curriculum> {
        make_curriculum(self.eps0, self.target, self.increment)
    }
}

/// One training attempt inside a phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    /// 1-based within the phase.
    pub k: usize,
    pub seed: u64,
    /// `−∞` serializes as `null`.
    pub score: Option<f64>,
    pub nominal: Option<f64>,
    pub adv: Option<f64>,
    pub adv_prev: Option<f64>,
    pub failed: bool,
    pub fingerprint: Option<u64>,
}

impl RunRecord {
    pub fn score_or_neg_inf(&self) -> f64 {
        self.score.unwrap_or(f64::NEG_INFINITY)
    }
}

/// Bookkeeping for one curriculum phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRecord {
    /// 0-based across the whole experiment.
    pub phase: usize,
    pub stage: String,
    pub index: usize,
    pub eps_lo: f64,
    pub eps_hi: f64,
    pub loss_mode: LossMode,
    pub bootstrap: u64,
    pub runs: Vec<RunRecord>,
    /// 1-based; `None` when every run failed.
    pub chosen: Option<usize>,
    pub selected: Option<u64>,
    pub passed: bool,
    pub next: Option<NextChoice>,
    #[serde(skip)]
    pub wall_clock_secs: f64,
}

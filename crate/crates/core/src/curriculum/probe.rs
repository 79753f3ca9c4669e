use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::schedule::Curriculum;
use super::{Evaluator, Model};
use crate::error::Result;

/// Robustness bars `V̄`. `efficacy` gates the early break on `V_k`; when
/// absent it is `nominal + adv`, the value a model exactly on both bars
/// would score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPolicy {
    pub nominal: f64,
    pub adv: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub efficacy: Option<f64>,
}

impl ThresholdPolicy {
    pub fn new(nominal: f64, adv: f64) -> Self {
        Self {
            nominal,
            adv,
            efficacy: None,
        }
    }

    pub fn efficacy(&self) -> f64 {
        self.efficacy.unwrap_or(self.nominal + self.adv)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipPolicy {
    /// `l = j + 1`.
    AlwaysNext,
    /// `l = i`, the first non-robust index.
    MaxSkip,
}

/// One adversarial probe made while choosing the next budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub index: usize,
    pub epsilon: f64,
    pub adv_reward: f64,
    pub robust: bool,
}

/// Outcome of [`choose_next`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NextChoice {
    pub from: usize,
    /// First non-robust index, `L + 1` if none. `None` when the policy did
    /// not need it.
    pub first_non_robust: Option<usize>,
    pub index: usize,
    pub eps_best: f64,
    pub nominal: Option<f64>,
    pub probes: Vec<Probe>,
}

/// Memoizes evaluations by model fingerprint and budget bits.
pub(crate) struct CachedEval<'a, E> {
    inner: &'a mut E,
    nominal: HashMap<u64, f64>,
    adv: HashMap<(u64, u64), f64>,
}

impl<'a, E> CachedEval<'a, E> {
    pub(crate) fn new(inner: &'a mut E) -> Self {
        Self {
            inner,
            nominal: HashMap::new(),
            adv: HashMap::new(),
        }
    }
}

impl<M: Model, E: Evaluator<M>> Evaluator<M> for CachedEval<'_, E> {
    fn nominal(&mut self, model: &M) -> Result<f64> {
        let key = model.fingerprint();
        if let Some(v) = self.nominal.get(&key) {
            return Ok(*v);
        }
        let v = self.inner.nominal(model)?;
        self.nominal.insert(key, v);
        Ok(v)
    }

    fn adversarial(&mut self, model: &M, epsilon: f64) -> Result<f64> {
        let key = (model.fingerprint(), epsilon.to_bits());
        if let Some(v) = self.adv.get(&key) {
            return Ok(*v);
        }
        let v = self.inner.adversarial(model, epsilon)?;
        self.adv.insert(key, v);
        Ok(v)
    }
}

/// Smallest index in `lo..=hi` at which `model` is not robust, or `hi + 1`.
///
/// Nominal reward is checked once: below its bar, `lo` is returned without
/// any attack. Otherwise budgets are probed in increasing order and probing
/// stops at the first failure.
pub fn eval_robust<M, E>(
    model: &M,
    curriculum: &Curriculum,
    lo: usize,
    hi: usize,
    thresholds: &ThresholdPolicy,
    eval: &mut E,
) -> Result<(usize, Option<f64>, Vec<Probe>)>
where
    E: Evaluator<M> + ?Sized,
{
    let mut probes = Vec::new();
    if lo > hi {
        return Ok((hi + 1, None, probes));
    }
    let nominal = eval.nominal(model)?;
    if nominal < thresholds.nominal {
        return Ok((lo, Some(nominal), probes));
    }
    for index in lo..=hi {
        let epsilon = curriculum.budget(index);
        let adv_reward = eval.adversarial(model, epsilon)?;
        let robust = adv_reward >= thresholds.adv;
        probes.push(Probe {
            index,
            epsilon,
            adv_reward,
            robust,
        });
        if !robust {
            return Ok((index, Some(nominal), probes));
        }
    }
    Ok((hi + 1, Some(nominal), probes))
}

/// Pick the next curriculum index after `j` and the budget already reached.
///
/// `always_next` does not depend on robustness, so it does not probe.
pub fn choose_next<M, E>(
    model: &M,
    curriculum: &Curriculum,
    j: usize,
    thresholds: &ThresholdPolicy,
    policy: SkipPolicy,
    eval: &mut E,
) -> Result<NextChoice>
where
    E: Evaluator<M> + ?Sized,
{
    let l_max = curriculum.len();
    let (index, first_non_robust, nominal, probes) = match policy {
        SkipPolicy::AlwaysNext => (j + 1, None, None, Vec::new()),
        SkipPolicy::MaxSkip => {
            let (i, nominal, probes) = eval_robust(model, curriculum, j + 1, l_max, thresholds, eval)?;
            (i, Some(i), nominal, probes)
        }
    };
    let index = index.min(l_max + 1);
    Ok(NextChoice {
        from: j,
        first_non_robust,
        index,
        eps_best: curriculum.budget(index - 1),
        nominal,
        probes,
    })
}

//! Clipped-surrogate losses.
//!
//! With `r = π_new(a|s) / π_old(a|s)` the per-step surrogate is
//! `min(r·A, clip(r, 1−η, 1+η)·A)`; losses are its negated batch mean. The
//! adversarial variant replaces `π_new(a|s)` by the two mixed policies
//! `π̃₁`, `π̃₂` and keeps the smaller surrogate.

use super::rollout::RolloutStep;
use crate::dqn::LossGrad;
use crate::error::{BclError, Result};
use crate::nn::{softmax, Network, Parameters};

/// `min(r·A, clip(r, 1−η, 1+η)·A)` and `d/dr` of it.
pub fn clipped_surrogate(ratio: f64, advantage: f64, eta: f64) -> (f64, f64) {
    let unclipped = ratio * advantage;
    let clipped = ratio.clamp(1.0 - eta, 1.0 + eta) * advantage;
    if unclipped <= clipped {
        (unclipped, advantage)
    } else {
        // Only reachable when the clamp is active, so the branch is flat in r.
        (clipped, 0.0)
    }
}

/// `(π̃₁(a), π̃₂(a))`: softmax of the clean logits with index `a` taken from
/// the adversarial logits, and of the adversarial logits with index `a`
/// taken from the clean ones.
pub fn tilde_policies(logits_clean: &[f64], logits_adv: &[f64], a: usize) -> (f64, f64) {
    let (mix1, mix2) = mixes(logits_clean, logits_adv, a);
    (softmax(&mix1)[a], softmax(&mix2)[a])
}

fn mixes(clean: &[f64], adv: &[f64], a: usize) -> (Vec<f64>, Vec<f64>) {
    let mut mix1 = clean.to_vec();
    mix1[a] = adv[a];
    let mut mix2 = adv.to_vec();
    mix2[a] = clean[a];
    (mix1, mix2)
}

fn check(steps: &[&RolloutStep], advantages: &[f64], eta: f64) -> Result<()> {
    if steps.is_empty() || steps.len() != advantages.len() {
        return Err(BclError::Shape("batch/advantage length mismatch".into()));
    }
    if !(eta > 0.0) {
        return Err(BclError::Domain(format!("clip η must be > 0, got {eta}")));
    }
    Ok(())
}

/// `−mean min(r·A, clip(r)·A)` with its gradient in the policy parameters.
pub fn ppo_standard_loss(
    policy: &Network,
    steps: &[&RolloutStep],
    advantages: &[f64],
    eta: f64,
) -> Result<LossGrad> {
    check(steps, advantages, eta)?;
    let n = steps.len() as f64;
    let mut grads = policy.params.zeros_like();
    let mut loss = 0.0;
    for (st, &adv) in steps.iter().zip(advantages) {
        let trace = policy.trace(&st.s)?;
        let p = softmax(&trace.output);
        let ratio = p[st.a] / st.old_prob();
        let (surr, dsurr) = clipped_surrogate(ratio, adv, eta);
        loss -= surr / n;
        if dsurr != 0.0 {
            let coef = -dsurr / n * ratio;
            let up = softmax_index_grad(&p, st.a, coef);
            policy.backward_trace(&trace, &up, &mut grads)?;
        }
    }
    Ok(LossGrad { loss, grads })
}

/// `coef · (e_a − p)`. Since `∂p_a/∂z = p_a (e_a − p)`, a ratio `r = p_a / c`
/// has `∂r/∂z = r (e_a − p)`.
fn softmax_index_grad(p: &[f64], a: usize, coef: f64) -> Vec<f64> {
    p.iter()
        .enumerate()
        .map(|(j, pj)| coef * (if j == a { 1.0 } else { 0.0 } - pj))
        .collect()
}

/// `−mean min_i min(r_i·A, clip(r_i)·A)` where `r_i` uses `π̃_i` from each
/// step's stored δ. Steps without δ use δ = 0.
pub fn ppo_adv_loss(
    policy: &Network,
    steps: &[&RolloutStep],
    advantages: &[f64],
    eta: f64,
) -> Result<LossGrad> {
    check(steps, advantages, eta)?;
    let n = steps.len() as f64;
    let mut grads = policy.params.zeros_like();
    let mut loss = 0.0;
    for (st, &adv) in steps.iter().zip(advantages) {
        let clean = policy.trace(&st.s)?;
        let perturbed = match &st.delta {
            Some(d) => d.apply(&st.s),
            None => st.s.clone(),
        };
        let adv_trace = policy.trace(&perturbed)?;
        let (mix1, mix2) = mixes(&clean.output, &adv_trace.output, st.a);
        let p1 = softmax(&mix1);
        let p2 = softmax(&mix2);
        let r1 = p1[st.a] / st.old_prob();
        let r2 = p2[st.a] / st.old_prob();
        let (s1, d1) = clipped_surrogate(r1, adv, eta);
        let (s2, d2) = clipped_surrogate(r2, adv, eta);
        // Ties go to π̃₁.
        let (surr, dsurr, ratio, p, first) = if s1 <= s2 {
            (s1, d1, r1, p1, true)
        } else {
            (s2, d2, r2, p2, false)
        };
        loss -= surr / n;
        if dsurr != 0.0 {
            let g = softmax_index_grad(&p, st.a, -dsurr / n * ratio);
            // Route each mix coordinate back to the trace it came from.
            let mut up_clean = vec![0.0; g.len()];
            let mut up_adv = vec![0.0; g.len()];
            for (j, gj) in g.iter().enumerate() {
                let from_adv = (j == st.a) == first;
                if from_adv {
                    up_adv[j] = *gj;
                } else {
                    up_clean[j] = *gj;
                }
            }
            policy.backward_trace(&clean, &up_clean, &mut grads)?;
            policy.backward_trace(&adv_trace, &up_adv, &mut grads)?;
        }
    }
    Ok(LossGrad { loss, grads })
}

/// Mean policy entropy on the clean observations and its gradient.
pub fn entropy_bonus(policy: &Network, steps: &[&RolloutStep]) -> Result<LossGrad> {
    let n = steps.len() as f64;
    let mut grads = policy.params.zeros_like();
    let mut total = 0.0;
    for st in steps {
        let trace = policy.trace(&st.s)?;
        let p = softmax(&trace.output);
        let h: f64 = -p.iter().filter(|v| **v > 0.0).map(|v| v * v.ln()).sum::<f64>();
        total += h / n;
        // dH/dz_j = −p_j (ln p_j + H)
        let up: Vec<f64> = p
            .iter()
            .map(|pj| if *pj > 0.0 { -pj * (pj.ln() + h) / n } else { 0.0 })
            .collect();
        policy.backward_trace(&trace, &up, &mut grads)?;
    }
    Ok(LossGrad { loss: total, grads })
}

/// `mean (V(s) − R)²` and its gradient in the value parameters.
pub fn value_loss(value: &Network, steps: &[&RolloutStep], returns: &[f64]) -> Result<LossGrad> {
    if steps.len() != returns.len() || steps.is_empty() {
        return Err(BclError::Shape("batch/return length mismatch".into()));
    }
    let n = steps.len() as f64;
    let mut grads = value.params.zeros_like();
    let mut loss = 0.0;
    for (st, &ret) in steps.iter().zip(returns) {
        let trace = value.trace(&st.s)?;
        let e = trace.output[0] - ret;
        loss += e * e / n;
        value.backward_trace(&trace, &[2.0 * e / n], &mut grads)?;
    }
    Ok(LossGrad { loss, grads })
}

/// Coefficients of the full objective
/// `κ·L_std + (1−κ)·L_adv + c_v·L_value − c_e·H`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub kappa: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
}

/// Full objective value with separate policy and value gradients.
#[derive(Debug, Clone)]
pub struct PpoLossGrad {
    pub loss: f64,
    pub policy_grads: Parameters,
    pub value_grads: Parameters,
}

/// `use_adv = false` drops the adversarial term entirely (standard PPO);
/// otherwise the κ blend applies.
#[allow(clippy::too_many_arguments)]
pub fn ppo_total_loss(
    policy: &Network,
    value: &Network,
    steps: &[&RolloutStep],
    advantages: &[f64],
    returns: &[f64],
    eta: f64,
    weights: LossWeights,
    use_adv: bool,
) -> Result<PpoLossGrad> {
    let std = ppo_standard_loss(policy, steps, advantages, eta)?;
    let ent = entropy_bonus(policy, steps)?;
    let val = value_loss(value, steps, returns)?;
    let mut policy_grads;
    let mut loss;
    if use_adv {
        let adv = ppo_adv_loss(policy, steps, advantages, eta)?;
        loss = weights.kappa * std.loss + (1.0 - weights.kappa) * adv.loss;
        policy_grads = std.grads;
        policy_grads.scale(weights.kappa);
        policy_grads.add_scaled(&adv.grads, 1.0 - weights.kappa);
    } else {
        loss = std.loss;
        policy_grads = std.grads;
    }
    loss += weights.value_coef * val.loss - weights.entropy_coef * ent.loss;
    policy_grads.add_scaled(&ent.grads, -weights.entropy_coef);
    let mut value_grads = val.grads;
    value_grads.scale(weights.value_coef);
    Ok(PpoLossGrad {
        loss,
        policy_grads,
        value_grads,
    })
}

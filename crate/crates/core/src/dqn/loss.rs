//! Double-DQN losses.
//!
//! Per transition, with `t = r + γ (1 − done) max_a' Q_target(s', a')`:
//!
//! - standard: `(t − Q_actor(s, a))²`
//! - adversarial: `Σ_y L_y` where `L_a = (t − Q̃(s, a))²` and
//!   `L_y = (Q_actor(s, y) − Q̃(s, y))²` for `y ≠ a`.
//!
//! `Q̃` is either the actor on the stored adversarial observation `s + δ`
//! (AT) or the worst-case endpoint of the IBP interval (RADIAL). Batch
//! losses are means over transitions; the target network is never
//! differentiated.

use serde::{Deserialize, Serialize};

use super::replay::Transition;
use crate::error::{BclError, Result};
use crate::nn::{Network, Parameters};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossMode {
    Standard,
    At,
    Radial,
}

impl LossMode {
    pub fn name(self) -> &'static str {
        match self {
            LossMode::Standard => "standard",
            LossMode::At => "at",
            LossMode::Radial => "radial",
        }
    }
}

/// A scalar loss and its parameter gradient.
#[derive(Debug, Clone)]
pub struct LossGrad {
    pub loss: f64,
    pub grads: Parameters,
}

/// `r + γ (1 − done) max_a' Q_target(s', a')`.
pub fn td_target(target: &Network, t: &Transition, gamma: f64) -> Result<f64> {
    if t.done {
        return Ok(t.r);
    }
    let q_next = target.forward(&t.s_next)?;
    let max = q_next.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(t.r + gamma * max)
}

/// Exact `Σ_y L_y` for one transition.
pub fn ly_terms(
    actor_q_clean: &[f64],
    actor_q_tilde: &[f64],
    target_max: f64,
    r: f64,
    gamma: f64,
    a: usize,
    done: bool,
) -> f64 {
    let bootstrap = if done { 0.0 } else { gamma * target_max };
    let t = r + bootstrap;
    actor_q_clean
        .iter()
        .zip(actor_q_tilde)
        .enumerate()
        .map(|(y, (q, qt))| {
            if y == a {
                (t - qt) * (t - qt)
            } else {
                (q - qt) * (q - qt)
            }
        })
        .sum()
}

/// `κ · standard + (1 − κ) · adv`.
pub fn total_loss(standard: f64, adv: f64, kappa: f64) -> f64 {
    kappa * standard + (1.0 - kappa) * adv
}

fn check_batch(batch: &[&Transition]) -> Result<()> {
    if batch.is_empty() {
        return Err(BclError::Shape("empty batch".into()));
    }
    Ok(())
}

/// Weighted blend `w_std · L_standard + w_adv · L_adv` over a batch, sharing
/// forward passes between the two terms.
#[allow(clippy::too_many_arguments)]
pub fn blended_loss(
    actor: &Network,
    target: &Network,
    batch: &[&Transition],
    mode: LossMode,
    epsilon: f64,
    gamma: f64,
    w_std: f64,
    w_adv: f64,
) -> Result<LossGrad> {
    check_batch(batch)?;
    let n = batch.len() as f64;
    let mut grads = actor.params.zeros_like();
    let mut loss = 0.0;
    let use_adv = w_adv != 0.0 && mode != LossMode::Standard;
    for t in batch {
        let tgt = td_target(target, t, gamma)?;
        let clean = actor.trace(&t.s)?;
        let q = &clean.output;
        let res = tgt - q[t.a];
        loss += w_std * res * res / n;
        let mut up_clean = vec![0.0; q.len()];
        up_clean[t.a] = w_std * (-2.0 * res) / n;

        if use_adv {
            match mode {
                LossMode::At => {
                    let delta = t.delta.as_ref().ok_or_else(|| {
                        BclError::Protocol("AT loss needs a stored perturbation".into())
                    })?;
                    let adv = actor.trace(&delta.apply(&t.s))?;
                    let qt = &adv.output;
                    let mut up_adv = vec![0.0; q.len()];
                    for y in 0..q.len() {
                        if y == t.a {
                            let e = tgt - qt[y];
                            loss += w_adv * e * e / n;
                            up_adv[y] = w_adv * (-2.0 * e) / n;
                        } else {
                            let e = q[y] - qt[y];
                            loss += w_adv * e * e / n;
                            up_clean[y] += w_adv * (2.0 * e) / n;
                            up_adv[y] = w_adv * (-2.0 * e) / n;
                        }
                    }
                    actor.backward_trace(&adv, &up_adv, &mut grads)?;
                }
                LossMode::Radial => {
                    let ibp = actor.ibp_trace(&t.s, epsilon)?;
                    let (lo, hi) = (&ibp.output.lower, &ibp.output.upper);
                    let mut g_lo = vec![0.0; q.len()];
                    let mut g_hi = vec![0.0; q.len()];
                    for y in 0..q.len() {
                        let anchor = if y == t.a { tgt } else { q[y] };
                        let e_lo = anchor - lo[y];
                        let e_hi = anchor - hi[y];
                        // Worst case over the interval is attained at an endpoint.
                        let (e, use_lo) = if e_lo * e_lo >= e_hi * e_hi {
                            (e_lo, true)
                        } else {
                            (e_hi, false)
                        };
                        loss += w_adv * e * e / n;
                        let g = w_adv * (-2.0 * e) / n;
                        if use_lo {
                            g_lo[y] = g;
                        } else {
                            g_hi[y] = g;
                        }
                        if y != t.a {
                            up_clean[y] += w_adv * (2.0 * e) / n;
                        }
                    }
                    actor.ibp_backward(&ibp, &g_lo, &g_hi, &mut grads)?;
                }
                LossMode::Standard => unreachable!(),
            }
        }
        actor.backward_trace(&clean, &up_clean, &mut grads)?;
    }
    Ok(LossGrad { loss, grads })
}

/// Mean squared TD error of the actor.
pub fn standard_loss(actor: &Network, target: &Network, batch: &[&Transition], gamma: f64) -> Result<LossGrad> {
    blended_loss(actor, target, batch, LossMode::Standard, 0.0, gamma, 1.0, 0.0)
}

/// `L_adv` with `Q̃ = Q_actor(s + δ)` from each transition's stored δ.
pub fn adv_loss_at(actor: &Network, target: &Network, batch: &[&Transition], gamma: f64) -> Result<LossGrad> {
    blended_loss(actor, target, batch, LossMode::At, 0.0, gamma, 0.0, 1.0)
}

/// `L_adv` with `Q̃` the worst-case IBP endpoint at budget `epsilon`. Upper
/// bounds `L_standard(s + δ)` for every admissible δ.
pub fn adv_loss_radial(
    actor: &Network,
    target: &Network,
    batch: &[&Transition],
    epsilon: f64,
    gamma: f64,
) -> Result<LossGrad> {
    blended_loss(actor, target, batch, LossMode::Radial, epsilon, gamma, 0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ly_fixed_point() {
        let q = [0.3, 0.7];
        // r + γ·max = q[a] with a = 1
        assert_eq!(ly_terms(&q, &q, 0.5, 0.2, 1.0, 1, false), 0.0);
    }

    #[test]
    fn ly_hand_example() {
        let v = ly_terms(&[0.0, 2.0], &[0.5, 1.0], 123.0, 1.0, 0.99, 0, true);
        assert!((v - 1.25).abs() < 1e-15);
    }

    #[test]
    fn total_loss_examples() {
        assert_eq!(total_loss(2.0, 7.0, 1.0), 2.0);
        assert_eq!(total_loss(2.0, 7.0, 0.0), 7.0);
        assert!((total_loss(2.0, 7.0, 0.8) - 3.0).abs() < 1e-12);
    }
}

use crate::attacks::Perturbation;
use crate::error::{BclError, Result};
use crate::nn::softmax;

/// One on-policy step. `logits` and `value` come from the behavior networks
/// and stay frozen through the update epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutStep {
    pub s: Vec<f64>,
    pub a: usize,
    pub reward: f64,
    pub logits: Vec<f64>,
    pub value: f64,
    pub done: bool,
    pub delta: Option<Perturbation>,
}

impl RolloutStep {
    /// `π_old(a|s)`.
    pub fn old_prob(&self) -> f64 {
        softmax(&self.logits)[self.a]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RolloutBatch {
    pub steps: Vec<RolloutStep>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

/// GAE(γ, λ) with done-masking. `last_value` bootstraps the step after the
/// final one (ignored when that step is terminal). Returns
/// `(advantages, returns)` with `returns = advantages + values`.
pub fn compute_advantages(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    last_value: f64,
    gamma: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = rewards.len();
    if values.len() != n || dones.len() != n {
        return Err(BclError::Shape("rollout field lengths differ".into()));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(BclError::Domain(format!("λ must lie in [0, 1], got {lambda}")));
    }
    let mut adv = vec![0.0; n];
    let mut gae = 0.0;
    for t in (0..n).rev() {
        let next_value = if t + 1 < n { values[t + 1] } else { last_value };
        let live = if dones[t] { 0.0 } else { 1.0 };
        let td = rewards[t] + gamma * next_value * live - values[t];
        gae = td + gamma * lambda * live * gae;
        adv[t] = gae;
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((adv, returns))
}

/// Shift to zero mean and scale to unit (population) variance. A constant
/// vector is only centred.
pub fn normalize_advantages(adv: &mut [f64]) {
    if adv.is_empty() {
        return;
    }
    let n = adv.len() as f64;
    let mean = adv.iter().sum::<f64>() / n;
    let var = adv.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    for a in adv.iter_mut() {
        *a -= mean;
        if sd > 1e-12 {
            *a /= sd;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rewards_zero_values() {
        let (a, r) = compute_advantages(&[0.0; 4], &[0.0; 4], &[false; 4], 0.0, 0.99, 0.95).unwrap();
        assert_eq!(a, vec![0.0; 4]);
        assert_eq!(r, vec![0.0; 4]);
    }

    #[test]
    fn single_step_episode() {
        let (a, _) = compute_advantages(&[1.0], &[0.0], &[true], 5.0, 0.9, 0.95).unwrap();
        assert_eq!(a, vec![1.0]);
    }

    #[test]
    fn normalized_moments() {
        let mut a = vec![1.0, 2.0, 3.0, 10.0];
        normalize_advantages(&mut a);
        let mean: f64 = a.iter().sum::<f64>() / 4.0;
        let var: f64 = a.iter().map(|x| x * x).sum::<f64>() / 4.0;
        assert!(mean.abs() < 1e-12);
        assert!((var - 1.0).abs() < 1e-12);
    }
}

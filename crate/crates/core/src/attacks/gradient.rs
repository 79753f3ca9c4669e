use serde::{Deserialize, Serialize};

use super::perturbation::{project, sign, Perturbation};
use crate::error::{BclError, Result};
use crate::nn::{argmax, log_softmax, softmax, Network};
use crate::rng::SplitMix64;

/// Cross-entropy between `Softmax(scores(x))` and the one-hot `target`,
/// with its input gradient.
pub fn cross_entropy_grad(net: &Network, x: &[f64], target: usize) -> Result<(f64, Vec<f64>)> {
    let trace = net.trace(x)?;
    let logp = log_softmax(&trace.output);
    let mut upstream = softmax(&trace.output);
    upstream[target] -= 1.0;
    let mut scratch = net.params.zeros_like();
    let gx = net.backward_trace(&trace, &upstream, &mut scratch)?;
    Ok((-logp[target], gx))
}

/// `f(x) = Softmax(scores(x)) · weights` with its input gradient.
pub fn expected_value_grad(net: &Network, x: &[f64], weights: &[f64]) -> Result<(f64, Vec<f64>)> {
    let trace = net.trace(x)?;
    if weights.len() != trace.output.len() {
        return Err(BclError::Shape("weight vector length != action count".into()));
    }
    let p = softmax(&trace.output);
    let value: f64 = p.iter().zip(weights).map(|(a, b)| a * b).sum();
    // df/dz_j = p_j (w_j - f)
    let upstream: Vec<f64> = p.iter().zip(weights).map(|(pj, wj)| pj * (wj - value)).collect();
    let mut scratch = net.params.zeros_like();
    let gx = net.backward_trace(&trace, &upstream, &mut scratch)?;
    Ok((value, gx))
}

/// `g(x) = Softmax(z) · z` with `z = scores(x)`, and its input gradient.
pub fn self_expectation_grad(net: &Network, x: &[f64]) -> Result<(f64, Vec<f64>)> {
    let trace = net.trace(x)?;
    let z = &trace.output;
    let p = softmax(z);
    let value: f64 = p.iter().zip(z).map(|(a, b)| a * b).sum();
    // dg/dz_j = p_j (1 + z_j - g)
    let upstream: Vec<f64> = p.iter().zip(z).map(|(pj, zj)| pj * (1.0 + zj - value)).collect();
    let mut scratch = net.params.zeros_like();
    let gx = net.backward_trace(&trace, &upstream, &mut scratch)?;
    Ok((value, gx))
}

/// Single signed step of size ε: `δ = clip_box(x + ε·sign(grad)) − x`.
pub fn fgsm(x: &[f64], epsilon: f64, grad: &[f64]) -> Perturbation {
    let mut delta: Vec<f64> = grad.iter().map(|g| epsilon * sign(*g)).collect();
    project(x, &mut delta, epsilon);
    Perturbation { delta }
}

/// Random start `δ₀ ~ U(−ε, ε)^d` (box-projected) drawn from `seed`.
pub fn random_start(x: &[f64], epsilon: f64, seed: u64) -> Vec<f64> {
    let mut rng = SplitMix64::new(seed);
    let mut delta: Vec<f64> = x.iter().map(|_| rng.uniform(-epsilon, epsilon)).collect();
    project(x, &mut delta, epsilon);
    delta
}

/// FGSM from a random start: `δ = Π_ε(δ₀ + α·sign(∇ loss(x + δ₀)))`.
///
/// `ascent_grad(x')` returns the gradient of the quantity the attacker wants
/// to *increase* at the perturbed point `x'`.
pub fn ri_fgsm<F>(x: &[f64], epsilon: f64, alpha: f64, seed: u64, mut ascent_grad: F) -> Result<Perturbation>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let mut delta = random_start(x, epsilon, seed);
    let x0: Vec<f64> = x.iter().zip(&delta).map(|(a, b)| a + b).collect();
    let g = ascent_grad(&x0)?;
    for (d, gi) in delta.iter_mut().zip(&g) {
        *d += alpha * sign(*gi);
    }
    project(x, &mut delta, epsilon);
    Ok(Perturbation { delta })
}

/// Result of a traced PGD run.
#[derive(Debug, Clone, PartialEq)]
pub struct PgdOutcome {
    /// Final iterate.
    pub perturbation: Perturbation,
    /// Loss at `δ₀, δ₁, …, δ_k`.
    pub losses: Vec<f64>,
}

impl PgdOutcome {
    /// Running maximum of `losses`.
    pub fn best_so_far(&self) -> Vec<f64> {
        let mut best = f64::NEG_INFINITY;
        self.losses
            .iter()
            .map(|l| {
                best = best.max(*l);
                best
            })
            .collect()
    }
}

/// Generic signed-gradient ascent from `δ₀ = 0` with per-step ball/box
/// projection. `loss_grad(x')` returns `(loss, ∇loss)` at `x'`.
pub fn pgd<F>(x: &[f64], epsilon: f64, steps: usize, step_size: f64, mut loss_grad: F) -> Result<PgdOutcome>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let mut delta = vec![0.0; x.len()];
    let mut losses = Vec::with_capacity(steps + 1);
    for _ in 0..steps {
        let xp: Vec<f64> = x.iter().zip(&delta).map(|(a, b)| a + b).collect();
        let (loss, g) = loss_grad(&xp)?;
        losses.push(loss);
        for (d, gi) in delta.iter_mut().zip(&g) {
            *d += step_size * sign(*gi);
        }
        project(x, &mut delta, epsilon);
    }
    let xp: Vec<f64> = x.iter().zip(&delta).map(|(a, b)| a + b).collect();
    losses.push(loss_grad(&xp)?.0);
    Ok(PgdOutcome {
        perturbation: Perturbation { delta },
        losses,
    })
}

/// Untargeted PGD on the cross-entropy against the clean action.
pub fn pgd_untargeted(
    net: &Network,
    x: &[f64],
    epsilon: f64,
    steps: usize,
    step_size: f64,
    clean_action: usize,
) -> Result<Perturbation> {
    Ok(pgd_untargeted_traced(net, x, epsilon, steps, step_size, clean_action)?.perturbation)
}

pub fn pgd_untargeted_traced(
    net: &Network,
    x: &[f64],
    epsilon: f64,
    steps: usize,
    step_size: f64,
    clean_action: usize,
) -> Result<PgdOutcome> {
    pgd(x, epsilon, steps, step_size, |xp| {
        cross_entropy_grad(net, xp, clean_action)
    })
}

/// RI-FGSM on the untargeted cross-entropy loss, as used for evaluation.
pub fn ri_fgsm_untargeted(
    net: &Network,
    x: &[f64],
    epsilon: f64,
    alpha: f64,
    clean_action: usize,
    seed: u64,
) -> Result<Perturbation> {
    ri_fgsm(x, epsilon, alpha, seed, |xp| {
        Ok(cross_entropy_grad(net, xp, clean_action)?.1)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RestartMode {
    /// First restart whose induced action differs from the clean argmax.
    FirstFlip,
    /// Restart whose induced action has the lowest clean score.
    LowestQ,
}

/// N-restart RI-FGSM. Restart `r` (1-based) uses seed `seed + r`.
#[allow(clippy::too_many_arguments)]
pub fn multi_restart(
    net: &Network,
    x: &[f64],
    epsilon: f64,
    alpha: f64,
    restarts: usize,
    mode: RestartMode,
    clean_q: &[f64],
    seed: u64,
) -> Result<Perturbation> {
    if restarts < 1 {
        return Err(BclError::config("attack.restarts", "restarts must be >= 1"));
    }
    let clean_action = argmax(clean_q);
    let mut best: Option<(f64, Perturbation)> = None;
    for r in 1..=restarts as u64 {
        let p = ri_fgsm_untargeted(net, x, epsilon, alpha, clean_action, seed.wrapping_add(r))?;
        let induced = argmax(&net.forward(&p.apply(x))?);
        match mode {
            RestartMode::FirstFlip => {
                if induced != clean_action {
                    return Ok(p);
                }
            }
            RestartMode::LowestQ => {
                let q = clean_q[induced];
                if best.as_ref().is_none_or(|(b, _)| q < *b) {
                    best = Some((q, p));
                }
            }
        }
    }
    Ok(match best {
        Some((_, p)) => p,
        None => Perturbation::zeros(x.len()),
    })
}

use bcl_core::attacks::Perturbation;
use bcl_core::nn::{softmax, Network, NetworkSpec, Parameters};
use bcl_core::ppo::{
    ppo_adv_loss, ppo_standard_loss, ppo_total_loss, tilde_policies, LossWeights, RolloutStep,
};
use bcl_core::rng::SplitMix64;

use super::{fd_grad, random_point, rel_err};

pub struct PpoCase {
    pub policy: Network,
    pub value: Network,
    pub steps: Vec<RolloutStep>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl PpoCase {
    pub fn refs(&self) -> Vec<&RolloutStep> {
        self.steps.iter().collect()
    }
}

/// Random policy/value pair and a batch whose behavior logits sit near the
/// current policy's, so some ratios clip and some do not.
pub fn random_case(seed: u64, with_delta: bool) -> PpoCase {
    let mut rng = SplitMix64::new(seed ^ 0x9905);
    let d = 2 + rng.below(4);
    let n = 2 + rng.below(3);
    let h = 3 + rng.below(5);
    let policy = Network::glorot(NetworkSpec::mlp(vec![d, h, n]), seed).unwrap();
    let value = Network::glorot(NetworkSpec::mlp(vec![d, h, 1]), seed + 1).unwrap();
    let batch = 4 + rng.below(5);
    let mut steps = Vec::new();
    let mut advantages = Vec::new();
    let mut returns = Vec::new();
    for _ in 0..batch {
        let s = random_point(d, &mut rng);
        let logits: Vec<f64> = policy
            .forward(&s)
            .unwrap()
            .iter()
            .map(|z| z + rng.uniform(-0.4, 0.4))
            .collect();
        let delta = with_delta.then(|| {
            let eps = rng.uniform(0.01, 0.1);
            let xp: Vec<f64> = s
                .iter()
                .map(|x| (x + rng.uniform(-eps, eps)).clamp(0.0, 1.0))
                .collect();
            Perturbation {
                delta: xp.iter().zip(&s).map(|(a, b)| a - b).collect(),
            }
        });
        steps.push(RolloutStep {
            s,
            a: rng.below(n),
            reward: rng.uniform(-1.0, 1.0),
            logits,
            value: 0.0,
            done: false,
            delta,
        });
        advantages.push(rng.uniform(-2.0, 2.0));
        returns.push(rng.uniform(-1.0, 1.0));
    }
    PpoCase {
        policy,
        value,
        steps,
        advantages,
        returns,
    }
}

/// Worst gap between the adversarial surrogate at δ = 0 and the standard
/// one, over loss values and gradients.
pub fn zero_delta_gap(cases: u64) -> f64 {
    let mut worst: f64 = 0.0;
    for seed in 0..cases {
        let c = random_case(seed, false);
        let steps = c.refs();
        let std = ppo_standard_loss(&c.policy, &steps, &c.advantages, 0.2).unwrap();
        let adv = ppo_adv_loss(&c.policy, &steps, &c.advantages, 0.2).unwrap();
        worst = worst.max((std.loss - adv.loss).abs());
        worst = worst.max(rel_err(&std.grads.to_flat(), &adv.grads.to_flat(), 1e-12));
    }
    worst
}

/// Random logit pairs where a mixed policy leaves (0, 1), disagrees with the
/// clean policy at zero perturbation, or moves against its substituted logit.
pub fn tilde_violations(cases: u64) -> usize {
    let mut bad = 0;
    let mut rng = SplitMix64::new(0x717DE);
    for _ in 0..cases {
        let n = 2 + rng.below(5);
        let clean: Vec<f64> = (0..n).map(|_| rng.uniform(-5.0, 5.0)).collect();
        let adv: Vec<f64> = clean.iter().map(|z| z + rng.uniform(-2.0, 2.0)).collect();
        let a = rng.below(n);
        let (p1, p2) = tilde_policies(&clean, &adv, a);
        let pc = softmax(&clean)[a];
        let pa = softmax(&adv)[a];
        let (q1, q2) = tilde_policies(&clean, &clean, a);
        let inside = |p: f64| p > 0.0 && p < 1.0;
        let moves_with = |p: f64, base: f64, dz: f64| (p - base) * dz >= 0.0;
        if !inside(p1)
            || !inside(p2)
            || q1 != pc
            || q2 != pc
            || !moves_with(p1, pc, adv[a] - clean[a])
            || !moves_with(p2, pa, clean[a] - adv[a])
        {
            bad += 1;
        }
    }
    bad
}

/// Worst relative error of the full objective's policy and value gradients
/// against central differences.
pub fn total_loss_gradient_error(seed: u64) -> f64 {
    let c = random_case(seed, true);
    let steps = c.refs();
    let w = LossWeights {
        kappa: 0.6,
        value_coef: 0.5,
        entropy_coef: 0.01,
    };
    let eval = |policy: &Network, value: &Network| {
        ppo_total_loss(policy, value, &steps, &c.advantages, &c.returns, 0.2, w, true).unwrap()
    };
    let g = eval(&c.policy, &c.value);
    let rebuild = |net: &Network, t: &[f64]| {
        Network::new(net.spec.clone(), Parameters::from_flat(&net.spec, t).unwrap()).unwrap()
    };
    let fd_p = fd_grad(&c.policy.params.to_flat(), 1e-6, |t| {
        eval(&rebuild(&c.policy, t), &c.value).loss
    });
    let fd_v = fd_grad(&c.value.params.to_flat(), 1e-6, |t| {
        eval(&c.policy, &rebuild(&c.value, t)).loss
    });
    rel_err(&g.policy_grads.to_flat(), &fd_p, 1e-8).max(rel_err(&g.value_grads.to_flat(), &fd_v, 1e-8))
}

#![allow(dead_code)]

pub mod ppo;
pub mod traces;

use bcl_core::curriculum::{BclConfig, PhaseRecord, ThresholdPolicy, Variant};
use bcl_core::nn::{Network, NetworkSpec};
use bcl_core::rng::SplitMix64;

/// Random small network; odd seeds get a dueling head.
pub fn random_net(seed: u64) -> Network {
    let mut rng = SplitMix64::new(seed);
    let d = 2 + rng.below(5);
    let h1 = 2 + rng.below(6);
    let h2 = 2 + rng.below(6);
    let out = 2 + rng.below(3);
    let sizes = vec![d, h1, h2, out];
    let spec = if seed % 2 == 1 {
        NetworkSpec::dueling(sizes)
    } else {
        NetworkSpec::mlp(sizes)
    };
    let mut net = Network::glorot(spec, seed).unwrap();
    // Glorot leaves biases at zero; nonzero biases exercise more code.
    for layer in &mut net.params.layers {
        for b in &mut layer.bias {
            *b = rng.uniform(-0.3, 0.3);
        }
    }
    net
}

pub fn random_point(dim: usize, rng: &mut SplitMix64) -> Vec<f64> {
    (0..dim).map(|_| rng.next_f64()).collect()
}

/// `‖a − b‖ / max(‖a‖ + ‖b‖, floor)`.
pub fn rel_err(a: &[f64], b: &[f64], floor: f64) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / (na + nb).max(floor)
}

/// Central differences of `f` over every coordinate of `theta`.
pub fn fd_grad<F: FnMut(&[f64]) -> f64>(theta: &[f64], h: f64, mut f: F) -> Vec<f64> {
    let mut t = theta.to_vec();
    (0..theta.len())
        .map(|i| {
            let orig = t[i];
            t[i] = orig + h;
            let up = f(&t);
            t[i] = orig - h;
            let down = f(&t);
            t[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Six budgets `0, 1/255, …, 5/255`, thresholds `(0.7, 0.5)`.
pub fn small_config(variant: Variant) -> BclConfig {
    BclConfig {
        variant,
        k: 3,
        k_min: 1,
        m: 2,
        eps0: 0.0,
        target: 5.0 / 255.0,
        increment: 1.0 / 255.0,
        thresholds: ThresholdPolicy::new(0.7, 0.5),
        ..BclConfig::default()
    }
}

pub fn eps(n: u32) -> f64 {
    n as f64 / 255.0
}

pub fn indices(records: &[PhaseRecord]) -> Vec<usize> {
    records.iter().map(|r| r.index).collect()
}

pub fn seeds(records: &[PhaseRecord]) -> Vec<Vec<u64>> {
    records
        .iter()
        .map(|r| r.runs.iter().map(|k| k.seed).collect())
        .collect()
}

/// Worst relative error of reverse-mode parameter and input gradients of
/// `<u, forward(x)>` against central differences.
pub fn network_gradient_error(seed: u64) -> f64 {
    let net = random_net(seed);
    let mut rng = SplitMix64::new(seed ^ 0xA5A5);
    let x = random_point(net.input_dim(), &mut rng);
    let u: Vec<f64> = (0..net.output_dim()).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let (grads, gx) = net.backward(&x, &u).unwrap();
    let dot = |out: Vec<f64>| out.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>();

    let theta = net.params.to_flat();
    let fd_theta = fd_grad(&theta, 1e-6, |t| {
        let params = bcl_core::nn::Parameters::from_flat(&net.spec, t).unwrap();
        let n = Network::new(net.spec.clone(), params).unwrap();
        dot(n.forward(&x).unwrap())
    });
    let fd_x = fd_grad(&x, 1e-6, |xp| dot(net.forward(xp).unwrap()));
    rel_err(&grads.to_flat(), &fd_theta, 1e-8).max(rel_err(&gx, &fd_x, 1e-8))
}

/// A point, a budget and `n` admissible perturbations of it: a mix of
/// interior samples, ball corners and box-clipped corners.
pub fn sampled_perturbations(x: &[f64], epsilon: f64, n: usize, rng: &mut SplitMix64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| {
            x.iter()
                .map(|&xi| {
                    let d = match i % 3 {
                        0 => rng.uniform(-epsilon, epsilon),
                        _ => {
                            if rng.next_f64() < 0.5 {
                                -epsilon
                            } else {
                                epsilon
                            }
                        }
                    };
                    (xi + d).clamp(0.0, 1.0)
                })
                .collect()
        })
        .collect()
}

/// Slack for comparing a forward pass with interval endpoints computed
/// through a different (center/radius) summation order.
pub const IBP_ROUNDING: f64 = 1e-12;

/// `(violations, nesting failures, zero-budget mismatches)` over `nets`
/// random networks and `samples` perturbations each.
pub fn ibp_oracle(nets: u64, samples: usize) -> (usize, usize, usize) {
    let mut violations = 0;
    let mut nesting = 0;
    let mut collapse = 0;
    for seed in 0..nets {
        let net = random_net(seed);
        let mut rng = SplitMix64::new(seed ^ 0x1B9);
        let x = random_point(net.input_dim(), &mut rng);
        let epsilon = rng.uniform(0.0, 0.2);
        let b = net.ibp_forward(&x, epsilon).unwrap();
        for xp in sampled_perturbations(&x, epsilon, samples, &mut rng) {
            let q = net.forward(&xp).unwrap();
            for (i, v) in q.iter().enumerate() {
                let slack = IBP_ROUNDING * (1.0 + v.abs());
                if *v < b.lower[i] - slack || *v > b.upper[i] + slack {
                    violations += 1;
                }
            }
        }
        let small = net.ibp_forward(&x, 0.02).unwrap();
        let large = net.ibp_forward(&x, 0.05).unwrap();
        let slack = |v: f64| IBP_ROUNDING * (1.0 + v.abs());
        let nested = (0..small.len()).all(|i| {
            large.lower[i] <= small.lower[i] + slack(small.lower[i])
                && small.upper[i] <= large.upper[i] + slack(small.upper[i])
        });
        if !nested {
            nesting += 1;
        }
        let zero = net.ibp_forward(&x, 0.0).unwrap();
        let f = net.forward(&x).unwrap();
        if zero.lower != f || zero.upper != f {
            collapse += 1;
        }
    }
    (violations, nesting, collapse)
}

/// Random transition for a network of input dimension `d` and `n` actions.
pub fn random_transition(d: usize, n: usize, rng: &mut SplitMix64) -> bcl_core::dqn::Transition {
    bcl_core::dqn::Transition {
        s: random_point(d, rng),
        a: rng.below(n),
        r: rng.uniform(-1.0, 1.0),
        s_next: random_point(d, rng),
        done: rng.next_f64() < 0.2,
        delta: None,
    }
}

/// Count of sampled δ for which the clean-target loss at `s + δ` (and the
/// AT loss with that δ) exceeds the interval-bound loss at budget ε.
pub fn radial_oracle(transitions: u64, samples: usize) -> usize {
    use bcl_core::attacks::Perturbation;
    use bcl_core::dqn::{adv_loss_at, adv_loss_radial, standard_loss};
    let mut violations = 0;
    for seed in 0..transitions {
        let actor = random_net(seed);
        let target = Network::glorot(actor.spec.clone(), seed + 10_000).unwrap();
        let mut rng = SplitMix64::new(seed ^ 0x7AD1);
        let mut t = random_transition(actor.input_dim(), actor.output_dim(), &mut rng);
        let epsilon = rng.uniform(0.0, 0.1);
        let bound = adv_loss_radial(&actor, &target, &[&t], epsilon, 0.99).unwrap().loss;
        for xp in sampled_perturbations(&t.s.clone(), epsilon, samples, &mut rng) {
            let mut moved = t.clone();
            moved.s = xp.clone();
            let std = standard_loss(&actor, &target, &[&moved], 0.99).unwrap().loss;
            t.delta = Some(Perturbation {
                delta: xp.iter().zip(&t.s).map(|(a, b)| a - b).collect(),
            });
            let at = adv_loss_at(&actor, &target, &[&t], 0.99).unwrap().loss;
            let slack = IBP_ROUNDING * (1.0 + bound.abs());
            if std > bound + slack || at > bound + slack {
                violations += 1;
            }
        }
    }
    violations
}

/// Totals of an attack-contract sweep.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct AttackSweep {
    pub perturbations: usize,
    pub inadmissible: usize,
    pub nondeterministic: usize,
    pub nonmonotone: usize,
}

/// Every evaluation attack and both training perturbations on `cases`
/// random networks, points and budgets.
pub fn attack_sweep(cases: u64) -> AttackSweep {
    use bcl_core::attacks::{
        fgsm, pgd_untargeted_traced, train_perturb_dqn, train_perturb_ppo, AttackKind, AttackSpec,
        EpsilonBudget, PpoPerturbMethod,
    };
    let mut sweep = AttackSweep::default();
    for seed in 0..cases {
        let net = random_net(seed);
        let mut rng = SplitMix64::new(seed ^ 0xA77A);
        let mut x = random_point(net.input_dim(), &mut rng);
        // Pin some coordinates to the box faces.
        x[0] = 0.0;
        if x.len() > 1 {
            x[1] = 1.0;
        }
        let epsilon = rng.uniform(0.0, 0.3);
        let q = net.forward(&x).unwrap();
        let mut check = |make: &mut dyn FnMut() -> bcl_core::attacks::Perturbation| {
            let p = make();
            sweep.perturbations += 1;
            if !p.is_admissible(&x, epsilon) {
                sweep.inadmissible += 1;
            }
            if make() != p {
                sweep.nondeterministic += 1;
            }
        };
        for kind in AttackKind::ALL {
            let mut spec = AttackSpec::new(kind, EpsilonBudget::new(epsilon).unwrap());
            spec.restarts = 8;
            spec.seed = seed;
            check(&mut || spec.perturb(&net, &x, 3).unwrap());
        }
        let g: Vec<f64> = (0..x.len()).map(|_| rng.uniform(-1.0, 1.0)).collect();
        check(&mut || fgsm(&x, epsilon, &g));
        check(&mut || train_perturb_dqn(&net, &q, &x, epsilon, 0.375, seed).unwrap());
        check(&mut || train_perturb_ppo(&net, &x, epsilon, PpoPerturbMethod::default(), seed).unwrap());
        check(&mut || {
            let m = PpoPerturbMethod::Pgd {
                steps: 10,
                step_size: 0.05,
            };
            train_perturb_ppo(&net, &x, epsilon, m, seed).unwrap()
        });
        let out = pgd_untargeted_traced(&net, &x, epsilon, 30, 0.1, bcl_core::nn::argmax(&q)).unwrap();
        let best = out.best_so_far();
        if best.windows(2).any(|w| w[1] < w[0]) || best[0] != out.losses[0] {
            sweep.nonmonotone += 1;
        }
    }
    sweep
}

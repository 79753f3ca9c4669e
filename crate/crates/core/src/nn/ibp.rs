//! Interval bound propagation.
//!
//! Inputs are the l∞ ball around `x` intersected with the observation box
//! `[0, 1]^d`. Affine blocks propagate center/radius (`c' = Wc + b`,
//! `r' = |W| r`), ReLU clamps both endpoints at zero, and the dueling head
//! combines the value and advantage intervals treating each `A_a` as a single
//! variable, which is tighter than naive interval subtraction but still sound.
//!
//! The propagation is differentiable in the parameters, which the RADIAL loss
//! needs; [`IbpTrace`] keeps what the backward pass requires.

use serde::{Deserialize, Serialize};

use super::network::Network;
use super::params::{Dense, Parameters};
use crate::error::{BclError, Result};

pub const OBS_LOW: f64 = 0.0;
pub const OBS_HIGH: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl IntervalBounds {
    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn contains(&self, values: &[f64]) -> bool {
        values.len() == self.len()
            && values
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *l <= *v && *v <= *u)
    }

    /// True when `self` lies inside `outer` elementwise.
    pub fn nested_in(&self, outer: &IntervalBounds) -> bool {
        self.len() == outer.len()
            && (0..self.len())
                .all(|i| outer.lower[i] <= self.lower[i] && self.upper[i] <= outer.upper[i])
    }
}

/// Per-layer intervals of one IBP pass.
#[derive(Debug, Clone)]
pub struct IbpTrace {
    /// Interval fed into each trunk layer.
    pub inputs: Vec<IntervalBounds>,
    /// Pre-activation interval of each trunk layer.
    pub pre: Vec<IntervalBounds>,
    /// Dueling: value interval and advantage interval.
    heads: Option<(IntervalBounds, IntervalBounds, IntervalBounds)>,
    pub output: IntervalBounds,
}

fn affine_interval(layer: &Dense, inp: &IntervalBounds) -> IntervalBounds {
    let center: Vec<f64> = inp
        .lower
        .iter()
        .zip(&inp.upper)
        .map(|(l, u)| (l + u) / 2.0)
        .collect();
    let radius: Vec<f64> = inp
        .lower
        .iter()
        .zip(&inp.upper)
        .map(|(l, u)| (u - l) / 2.0)
        .collect();
    let c = layer.affine(&center);
    let r = layer.abs_affine(&radius);
    IntervalBounds {
        lower: c.iter().zip(&r).map(|(c, r)| c - r).collect(),
        upper: c.iter().zip(&r).map(|(c, r)| c + r).collect(),
    }
}

/// Backward through [`affine_interval`]: accumulates parameter gradients and
/// returns `(grad_lower_in, grad_upper_in)`.
fn affine_interval_backward(
    layer: &Dense,
    inp: &IntervalBounds,
    gl: &[f64],
    gu: &[f64],
    grad: &mut Dense,
) -> (Vec<f64>, Vec<f64>) {
    let cols = layer.cols;
    let mut gc_in = vec![0.0; cols];
    let mut gr_in = vec![0.0; cols];
    for r in 0..layer.rows {
        let gc = gl[r] + gu[r];
        let gr = gu[r] - gl[r];
        if gc == 0.0 && gr == 0.0 {
            continue;
        }
        grad.bias[r] += gc;
        let wrow = layer.row(r);
        let grow = &mut grad.weights[r * cols..(r + 1) * cols];
        for c in 0..cols {
            let center = (inp.lower[c] + inp.upper[c]) / 2.0;
            let radius = (inp.upper[c] - inp.lower[c]) / 2.0;
            let w = wrow[c];
            let sign = if w > 0.0 {
                1.0
            } else if w < 0.0 {
                -1.0
            } else {
                0.0
            };
            grow[c] += gc * center + gr * radius * sign;
            gc_in[c] += gc * w;
            gr_in[c] += gr * w.abs();
        }
    }
    let gl_in = gc_in.iter().zip(&gr_in).map(|(c, r)| (c - r) / 2.0).collect();
    let gu_in = gc_in.iter().zip(&gr_in).map(|(c, r)| (c + r) / 2.0).collect();
    (gl_in, gu_in)
}

fn relu_interval(z: &IntervalBounds) -> IntervalBounds {
    IntervalBounds {
        lower: z.lower.iter().map(|v| v.max(0.0)).collect(),
        upper: z.upper.iter().map(|v| v.max(0.0)).collect(),
    }
}

/// Clipped input box `[clip(x - eps), clip(x + eps)]`.
pub fn input_box(x: &[f64], epsilon: f64) -> IntervalBounds {
    IntervalBounds {
        lower: x.iter().map(|v| (v - epsilon).clamp(OBS_LOW, OBS_HIGH)).collect(),
        upper: x.iter().map(|v| (v + epsilon).clamp(OBS_LOW, OBS_HIGH)).collect(),
    }
}

fn dueling_interval(v: &IntervalBounds, adv: &IntervalBounds) -> IntervalBounds {
    // Same evaluation order as `dueling_combine`, so a zero-width interval
    // reproduces the forward pass bit for bit.
    let n = adv.len();
    let mut lower = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    for a in 0..n {
        let mut mean_lo = 0.0;
        let mut mean_hi = 0.0;
        for j in 0..n {
            if j == a {
                mean_lo += adv.lower[j];
                mean_hi += adv.upper[j];
            } else {
                mean_lo += adv.upper[j];
                mean_hi += adv.lower[j];
            }
        }
        lower.push(v.lower[0] + adv.lower[a] - mean_lo / n as f64);
        upper.push(v.upper[0] + adv.upper[a] - mean_hi / n as f64);
    }
    IntervalBounds { lower, upper }
}

impl Network {
    /// Sound output bounds over the clipped l∞ ball of radius `epsilon`.
    pub fn ibp_forward(&self, x: &[f64], epsilon: f64) -> Result<IntervalBounds> {
        Ok(self.ibp_trace(x, epsilon)?.output)
    }

    pub fn ibp_trace(&self, x: &[f64], epsilon: f64) -> Result<IbpTrace> {
        if !(epsilon >= 0.0) {
            return Err(BclError::Domain(format!(
                "IBP budget must be >= 0, got {epsilon}"
            )));
        }
        if x.len() != self.input_dim() {
            return Err(BclError::Shape(format!(
                "input has dimension {}, network expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        let trunk = self.spec.trunk_len();
        let layers = &self.params.layers;
        let mut cur = input_box(x, epsilon);
        let mut inputs = Vec::with_capacity(trunk);
        let mut pre = Vec::with_capacity(trunk);
        for (i, layer) in layers[..trunk].iter().enumerate() {
            let z = affine_interval(layer, &cur);
            let hidden = self.spec.dueling || i + 1 < trunk;
            let next = if hidden { relu_interval(&z) } else { z.clone() };
            inputs.push(std::mem::replace(&mut cur, next));
            pre.push(z);
        }
        if self.spec.dueling {
            let v = affine_interval(&layers[trunk], &cur);
            let adv = affine_interval(&layers[trunk + 1], &cur);
            let output = dueling_interval(&v, &adv);
            Ok(IbpTrace {
                inputs,
                pre,
                heads: Some((cur, v, adv)),
                output,
            })
        } else {
            Ok(IbpTrace {
                inputs,
                pre,
                heads: None,
                output: cur,
            })
        }
    }

    /// Accumulate the parameter gradient of `<gl, lower> + <gu, upper>`.
    pub fn ibp_backward(
        &self,
        trace: &IbpTrace,
        grad_lower: &[f64],
        grad_upper: &[f64],
        grads: &mut Parameters,
    ) -> Result<()> {
        let n_out = self.output_dim();
        if grad_lower.len() != n_out || grad_upper.len() != n_out {
            return Err(BclError::Shape("IBP cotangent has wrong dimension".into()));
        }
        let trunk = self.spec.trunk_len();
        let layers = &self.params.layers;
        let (mut gl, mut gu) = if let Some((hidden, _, _)) = &trace.heads {
            let n = n_out as f64;
            let sum_gl: f64 = grad_lower.iter().sum();
            let sum_gu: f64 = grad_upper.iter().sum();
            // lower_a = vl + (1 - 1/n) al_a - (1/n) sum_{j != a} au_j
            // upper_a = vu + (1 - 1/n) au_a - (1/n) sum_{j != a} al_j
            let g_al: Vec<f64> = (0..n_out)
                .map(|j| (1.0 - 1.0 / n) * grad_lower[j] - (sum_gu - grad_upper[j]) / n)
                .collect();
            let g_au: Vec<f64> = (0..n_out)
                .map(|j| (1.0 - 1.0 / n) * grad_upper[j] - (sum_gl - grad_lower[j]) / n)
                .collect();
            let (value_grads, rest) = grads.layers[trunk..].split_at_mut(1);
            let (vl, vu) = affine_interval_backward(
                &layers[trunk],
                hidden,
                &[sum_gl],
                &[sum_gu],
                &mut value_grads[0],
            );
            let (al, au) =
                affine_interval_backward(&layers[trunk + 1], hidden, &g_al, &g_au, &mut rest[0]);
            (
                vl.iter().zip(&al).map(|(a, b)| a + b).collect::<Vec<_>>(),
                vu.iter().zip(&au).map(|(a, b)| a + b).collect::<Vec<_>>(),
            )
        } else {
            (grad_lower.to_vec(), grad_upper.to_vec())
        };
        for i in (0..trunk).rev() {
            let hidden = self.spec.dueling || i + 1 < trunk;
            if hidden {
                let z = &trace.pre[i];
                for j in 0..gl.len() {
                    if z.lower[j] <= 0.0 {
                        gl[j] = 0.0;
                    }
                    if z.upper[j] <= 0.0 {
                        gu[j] = 0.0;
                    }
                }
            }
            let (a, b) =
                affine_interval_backward(&layers[i], &trace.inputs[i], &gl, &gu, &mut grads.layers[i]);
            gl = a;
            gu = b;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::params::NetworkSpec;

    #[test]
    fn zero_budget_collapses_to_forward() {
        let net = Network::glorot(NetworkSpec::dueling(vec![5, 8, 8, 3]), 4).unwrap();
        let x = [0.1, 0.5, 0.9, 0.3, 0.7];
        let b = net.ibp_forward(&x, 0.0).unwrap();
        let q = net.forward(&x).unwrap();
        assert_eq!(b.lower, q);
        assert_eq!(b.upper, q);
    }

    #[test]
    fn negative_budget_is_domain_error() {
        let net = Network::glorot(NetworkSpec::mlp(vec![2, 2]), 0).unwrap();
        assert!(matches!(
            net.ibp_forward(&[0.5, 0.5], -0.1),
            Err(BclError::Domain(_))
        ));
    }

    #[test]
    fn hand_interval_first_layer() {
        // Hidden layer W = [[1, -1]], b = [0]; identity output layer.
        let spec = NetworkSpec::mlp(vec![2, 1, 1]);
        let params = Parameters {
            layers: vec![
                Dense {
                    rows: 1,
                    cols: 2,
                    weights: vec![1.0, -1.0],
                    bias: vec![0.0],
                },
                Dense {
                    rows: 1,
                    cols: 1,
                    weights: vec![1.0],
                    bias: vec![0.0],
                },
            ],
        };
        let net = Network::new(spec, params).unwrap();
        let t = net.ibp_trace(&[0.5, 0.5], 0.1).unwrap();
        assert!((t.pre[0].lower[0] + 0.2).abs() < 1e-12);
        assert!((t.pre[0].upper[0] - 0.2).abs() < 1e-12);
        assert_eq!(t.output.lower[0], 0.0);
        assert!((t.output.upper[0] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn input_box_is_clipped() {
        let b = input_box(&[0.02, 0.99], 0.05);
        assert_eq!(b.lower[0], 0.0);
        assert_eq!(b.upper[1], 1.0);
    }
}

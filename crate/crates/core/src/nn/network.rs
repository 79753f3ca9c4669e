use serde::{Deserialize, Serialize};

use super::params::{NetworkSpec, Parameters};
use crate::error::{BclError, Result};

/// `out_a = v + adv_a - mean(adv)`.
///
/// Mean subtraction keeps the value/advantage split identifiable and leaves
/// `argmax(out) == argmax(adv)`.
pub fn dueling_combine(v: f64, adv: &[f64]) -> Result<Vec<f64>> {
    if adv.is_empty() {
        return Err(BclError::Shape("dueling_combine: empty advantage".into()));
    }
    let mean = adv.iter().sum::<f64>() / adv.len() as f64;
    Ok(adv.iter().map(|a| v + a - mean).collect())
}

/// Intermediate values of one forward pass, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Trace {
    /// `inputs[i]` is the input to trunk layer `i`.
    inputs: Vec<Vec<f64>>,
    /// Pre-activation output of each trunk layer.
    pre: Vec<Vec<f64>>,
    /// Dueling only: post-ReLU last hidden vector, value, raw advantages.
    heads: Option<(Vec<f64>, f64, Vec<f64>)>,
    pub output: Vec<f64>,
}

/// A feed-forward network: ReLU hidden layers, identity output, optional
/// dueling head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub spec: NetworkSpec,
    pub params: Parameters,
}

#[inline]
fn relu(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&z| z.max(0.0)).collect()
}

impl Network {
    pub fn new(spec: NetworkSpec, params: Parameters) -> Result<Self> {
        spec.validate()?;
        if !params.matches(&spec) {
            return Err(BclError::Shape(
                "parameter shapes do not match network spec".into(),
            ));
        }
        Ok(Self { spec, params })
    }

    pub fn glorot(spec: NetworkSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let params = Parameters::glorot(&spec, seed);
        Ok(Self { spec, params })
    }

    pub fn input_dim(&self) -> usize {
        self.spec.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.spec.output_dim()
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(BclError::Shape(format!(
                "input has dimension {}, network expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.trace(x)?.output)
    }

    pub fn trace(&self, x: &[f64]) -> Result<Trace> {
        self.check_input(x)?;
        let trunk = self.spec.trunk_len();
        let layers = &self.params.layers;
        let mut inputs = Vec::with_capacity(trunk);
        let mut pre = Vec::with_capacity(trunk);
        let mut h = x.to_vec();
        for (i, layer) in layers[..trunk].iter().enumerate() {
            let z = layer.affine(&h);
            let hidden = self.spec.dueling || i + 1 < trunk;
            let next = if hidden { relu(&z) } else { z.clone() };
            inputs.push(std::mem::replace(&mut h, next));
            pre.push(z);
        }
        if self.spec.dueling {
            let v = layers[trunk].affine(&h)[0];
            let adv = layers[trunk + 1].affine(&h);
            let output = dueling_combine(v, &adv)?;
            Ok(Trace {
                inputs,
                pre,
                heads: Some((h, v, adv)),
                output,
            })
        } else {
            Ok(Trace {
                inputs,
                pre,
                heads: None,
                output: h,
            })
        }
    }

    /// Accumulate the gradient of `<upstream, output>` into `grads` and return
    /// the gradient with respect to the input. ReLU'(0) = 0.
    pub fn backward_trace(
        &self,
        trace: &Trace,
        upstream: &[f64],
        grads: &mut Parameters,
    ) -> Result<Vec<f64>> {
        if upstream.len() != self.output_dim() {
            return Err(BclError::Shape(format!(
                "upstream has dimension {}, output is {}",
                upstream.len(),
                self.output_dim()
            )));
        }
        let trunk = self.spec.trunk_len();
        let layers = &self.params.layers;
        let mut g: Vec<f64> = if let Some((hidden, _, _)) = &trace.heads {
            // dQ_a/dV = 1, dQ_a/dA_j = [a == j] - 1/n
            let n = upstream.len() as f64;
            let total: f64 = upstream.iter().sum();
            let g_adv: Vec<f64> = upstream.iter().map(|u| u - total / n).collect();
            let (value_grads, rest) = grads.layers[trunk..].split_at_mut(1);
            let gh_v = layers[trunk].backprop(hidden, &[total], &mut value_grads[0]);
            let gh_a = layers[trunk + 1].backprop(hidden, &g_adv, &mut rest[0]);
            gh_v.iter().zip(&gh_a).map(|(a, b)| a + b).collect()
        } else {
            upstream.to_vec()
        };
        for i in (0..trunk).rev() {
            let hidden = self.spec.dueling || i + 1 < trunk;
            if hidden {
                for (gj, z) in g.iter_mut().zip(&trace.pre[i]) {
                    if *z <= 0.0 {
                        *gj = 0.0;
                    }
                }
            }
            g = layers[i].backprop(&trace.inputs[i], &g, &mut grads.layers[i]);
        }
        Ok(g)
    }

    /// Exact reverse-mode gradients of `<upstream, forward(x)>`:
    /// `(parameter gradient, input gradient)`.
    pub fn backward(&self, x: &[f64], upstream: &[f64]) -> Result<(Parameters, Vec<f64>)> {
        let trace = self.trace(x)?;
        let mut grads = self.params.zeros_like();
        let gx = self.backward_trace(&trace, upstream, &mut grads)?;
        Ok((grads, gx))
    }

    /// Gradient of `<upstream, forward(x)>` with respect to `x` only.
    pub fn input_gradient(&self, x: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
        Ok(self.backward(x, upstream)?.1)
    }
}

/// Lowest-index argmax. Returns 0 for an empty slice.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

pub fn log_softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    z.iter().map(|v| v - lse).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::params::Dense;

    fn single_affine() -> Network {
        let spec = NetworkSpec::mlp(vec![1, 2]);
        let params = Parameters {
            layers: vec![Dense {
                rows: 2,
                cols: 1,
                weights: vec![1.0, -1.0],
                bias: vec![0.0, 0.0],
            }],
        };
        Network::new(spec, params).unwrap()
    }

    #[test]
    fn affine_forward() {
        let net = single_affine();
        assert_eq!(net.forward(&[0.3]).unwrap(), vec![0.3, -0.3]);
    }

    #[test]
    fn affine_backward_picks_weight_row() {
        let spec = NetworkSpec::mlp(vec![3, 2]);
        let net = Network::glorot(spec, 5).unwrap();
        let (_, gx) = net.backward(&[0.1, 0.2, 0.3], &[1.0, 0.0]).unwrap();
        assert_eq!(gx, net.params.layers[0].row(0).to_vec());
    }

    #[test]
    fn zero_cotangent_gives_zero_gradients() {
        let net = Network::glorot(NetworkSpec::dueling(vec![4, 6, 3]), 9).unwrap();
        let (g, gx) = net.backward(&[0.2, 0.4, 0.6, 0.8], &[0.0; 3]).unwrap();
        assert!(g.iter().all(|v| *v == 0.0));
        assert!(gx.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn dimension_mismatch_is_shape_error() {
        let net = single_affine();
        assert!(matches!(net.forward(&[0.1, 0.2]), Err(BclError::Shape(_))));
        assert!(matches!(net.backward(&[0.1], &[1.0]), Err(BclError::Shape(_))));
    }

    #[test]
    fn dueling_examples() {
        assert_eq!(dueling_combine(1.0, &[0.0, 0.0, 0.0]).unwrap(), vec![1.0; 3]);
        assert_eq!(dueling_combine(0.0, &[3.0, 0.0, 0.0]).unwrap(), vec![2.0, -1.0, -1.0]);
        assert!(dueling_combine(0.0, &[]).is_err());
    }

    #[test]
    fn argmax_ties_lowest_index() {
        assert_eq!(argmax(&[1.0, 1.0]), 0);
        assert_eq!(argmax(&[0.0, 3.0, 2.0]), 1);
    }
}

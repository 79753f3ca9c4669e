use serde::{Deserialize, Serialize};

use crate::error::{BclError, Result};
use crate::rng::SplitMix64;

/// Layer sizes plus the optional dueling split.
///
/// `layer_sizes = [d, h1, …, hk, n_actions]`. Without dueling this is a plain
/// MLP. With dueling the last hidden width `hk` feeds two parallel heads: a
/// scalar state value and an `n_actions` advantage vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub layer_sizes: Vec<usize>,
    #[serde(default)]
    pub dueling: bool,
}

impl NetworkSpec {
    pub fn mlp(layer_sizes: Vec<usize>) -> Self {
        Self {
            layer_sizes,
            dueling: false,
        }
    }

    pub fn dueling(layer_sizes: Vec<usize>) -> Self {
        Self {
            layer_sizes,
            dueling: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let min = if self.dueling { 3 } else { 2 };
        if self.layer_sizes.len() < min {
            return Err(BclError::Shape(format!(
                "network needs at least {min} layer sizes (dueling = {}), got {}",
                self.dueling,
                self.layer_sizes.len()
            )));
        }
        if self.layer_sizes.contains(&0) {
            return Err(BclError::Shape("layer sizes must be >= 1".into()));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().expect("validated spec")
    }

    /// `(rows, cols)` = `(fan_out, fan_in)` for every affine block in storage
    /// order: trunk layers first, then (dueling only) value head and advantage
    /// head.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let s = &self.layer_sizes;
        if self.dueling {
            let trunk_end = s.len() - 1;
            let mut shapes: Vec<_> = (0..trunk_end - 1).map(|i| (s[i + 1], s[i])).collect();
            let hidden = s[trunk_end - 1];
            shapes.push((1, hidden));
            shapes.push((s[trunk_end], hidden));
            shapes
        } else {
            (0..s.len() - 1).map(|i| (s[i + 1], s[i])).collect()
        }
    }

    /// Number of trunk (ReLU-activated or final plain) layers before the heads.
    pub(crate) fn trunk_len(&self) -> usize {
        if self.dueling {
            self.layer_sizes.len() - 2
        } else {
            self.layer_sizes.len() - 1
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.layer_shapes().iter().map(|(r, c)| r * c + r).sum()
    }
}

/// One affine block, weights stored row-major as `rows x cols`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            weights: vec![0.0; rows * cols],
            bias: vec![0.0; rows],
        }
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.weights[r * self.cols..(r + 1) * self.cols]
    }

    /// `out = W x + b`.
    pub(crate) fn affine(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|r| {
                let mut acc = self.bias[r];
                for (w, xi) in self.row(r).iter().zip(x) {
                    acc += w * xi;
                }
                acc
            })
            .collect()
    }

    /// `out = |W| x` (no bias).
    pub(crate) fn abs_affine(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|r| {
                let mut acc = 0.0;
                for (w, xi) in self.row(r).iter().zip(x) {
                    acc += w.abs() * xi;
                }
                acc
            })
            .collect()
    }

    /// Accumulate `scale * (g ⊗ x)` into the weight gradient and `scale * g`
    /// into the bias gradient; return `Wᵀ g`.
    pub(crate) fn backprop(&self, x: &[f64], g: &[f64], grad: &mut Dense) -> Vec<f64> {
        let mut gx = vec![0.0; self.cols];
        for r in 0..self.rows {
            let gr = g[r];
            if gr == 0.0 {
                continue;
            }
            grad.bias[r] += gr;
            let wrow = self.row(r);
            let grow = &mut grad.weights[r * self.cols..(r + 1) * self.cols];
            for c in 0..self.cols {
                grow[c] += gr * x[c];
                gx[c] += gr * wrow[c];
            }
        }
        gx
    }
}

/// All weights and biases of one network, 64-bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    pub layers: Vec<Dense>,
}

impl Parameters {
    pub fn zeros(spec: &NetworkSpec) -> Self {
        Self {
            layers: spec
                .layer_shapes()
                .into_iter()
                .map(|(r, c)| Dense::zeros(r, c))
                .collect(),
        }
    }

    /// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn glorot(spec: &NetworkSpec, seed: u64) -> Self {
        let mut rng = SplitMix64::new(seed);
        let mut params = Self::zeros(spec);
        for layer in &mut params.layers {
            let limit = (6.0 / (layer.rows + layer.cols) as f64).sqrt();
            for w in &mut layer.weights {
                *w = rng.uniform(-limit, limit);
            }
        }
        params
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| Dense::zeros(l.rows, l.cols))
                .collect(),
        }
    }

    pub fn matches(&self, spec: &NetworkSpec) -> bool {
        let shapes = spec.layer_shapes();
        shapes.len() == self.layers.len()
            && shapes.iter().zip(&self.layers).all(|(&(r, c), l)| {
                l.rows == r && l.cols == c && l.weights.len() == r * c && l.bias.len() == r
            })
    }

    /// Flat, layer-ordered view: for each layer, weights (row-major) then bias.
    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn len(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.iter().copied().collect()
    }

    pub fn from_flat(spec: &NetworkSpec, flat: &[f64]) -> Result<Self> {
        let mut params = Self::zeros(spec);
        if flat.len() != params.len() {
            return Err(BclError::Shape(format!(
                "expected {} parameters, got {}",
                params.len(),
                flat.len()
            )));
        }
        for (dst, src) in params.iter_mut().zip(flat) {
            *dst = *src;
        }
        Ok(params)
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &Parameters, scale: f64) {
        for (a, b) in self.iter_mut().zip(other.iter()) {
            *a += scale * b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for v in self.iter_mut() {
            *v *= s;
        }
    }

    /// 64-bit FNV-1a over the little-endian bytes of every entry. Equal
    /// fingerprints identify bit-identical parameters.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for v in self.iter() {
            for b in v.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }
}

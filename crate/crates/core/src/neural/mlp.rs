use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{math, Error, Result};

/// Checkpoint layout version understood by this build.
pub const FORMAT_VERSION: u32 = 1;

/// Target marking a head with no label for an example (an absent car).
pub const IGNORE_TARGET: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => math::tanh(x),
        }
    }

    /// Derivative expressed through the activation output.
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
        }
    }
}

/// Fixed-length real input produced by an environment featurizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn concat(&self, tail: &[f64]) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.0.len() + tail.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(tail);
        v
    }
}

/// Dense layer, weights row-major `out_dim x in_dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Dense {
    fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            in_dim,
            out_dim,
            weights: alloc::vec![0.0; in_dim * out_dim],
            biases: alloc::vec![0.0; out_dim],
        }
    }

    fn affine(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.out_dim {
            let row = &self.weights[o * self.in_dim..(o + 1) * self.in_dim];
            let mut acc = self.biases[o];
            for (w, xi) in row.iter().zip(x) {
                acc += w * xi;
            }
            out.push(acc);
        }
    }
}

/// Parameters of a feed-forward network. The output layer is linear and its
/// logits are split into softmax groups (`heads`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub format_version: u32,
    pub input_dim: usize,
    pub output_dim: usize,
    pub activation: Activation,
    pub heads: Vec<usize>,
    pub layers: Vec<Dense>,
}

/// Parameter gradients with the same layout as [`MlpParams::layers`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

impl Gradients {
    pub fn zeros_like(params: &MlpParams) -> Self {
        Self {
            layers: params
                .layers
                .iter()
                .map(|l| Dense::zeros(l.in_dim, l.out_dim))
                .collect(),
        }
    }

    pub fn scale(&mut self, s: f64) {
        for l in &mut self.layers {
            l.weights.iter_mut().for_each(|w| *w *= s);
            l.biases.iter_mut().for_each(|b| *b *= s);
        }
    }

    pub fn clear(&mut self) {
        self.scale(0.0);
    }
}

impl MlpParams {
    /// All-zero parameters for the layer sizes `dims = [in, h1, .., out]`.
    pub fn zeros(dims: &[usize], activation: Activation, heads: Vec<usize>) -> Self {
        assert!(dims.len() >= 2, "need at least input and output sizes");
        let layers = dims.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect();
        Self {
            format_version: FORMAT_VERSION,
            input_dim: dims[0],
            output_dim: dims[dims.len() - 1],
            activation,
            heads,
            layers,
        }
    }

    /// Uniform Glorot initialization scaled by `scale` for hidden layers; the
    /// output layer starts at zero so the initial proposal is uniform.
    pub fn random<R: Rng + ?Sized>(
        dims: &[usize],
        activation: Activation,
        heads: Vec<usize>,
        scale: f64,
        rng: &mut R,
    ) -> Self {
        let mut p = Self::zeros(dims, activation, heads);
        let n = p.layers.len();
        for layer in p.layers.iter_mut().take(n - 1) {
            let limit = scale * math::sqrt(6.0 / (layer.in_dim + layer.out_dim) as f64);
            for w in &mut layer.weights {
                *w = rng.gen_range(-limit..limit);
            }
        }
        p
    }

    /// Like [`MlpParams::random`] but also randomizes the output layer.
    pub fn random_full<R: Rng + ?Sized>(
        dims: &[usize],
        activation: Activation,
        heads: Vec<usize>,
        scale: f64,
        rng: &mut R,
    ) -> Self {
        let mut p = Self::zeros(dims, activation, heads);
        for layer in &mut p.layers {
            let limit = scale * math::sqrt(6.0 / (layer.in_dim + layer.out_dim) as f64);
            for w in layer.weights.iter_mut().chain(layer.biases.iter_mut()) {
                *w = rng.gen_range(-limit..limit);
            }
        }
        p
    }

    pub fn heads(&self) -> &[usize] {
        &self.heads
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    /// Checks version, dimension chaining, head partition and finiteness.
    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                expected: FORMAT_VERSION,
                found: self.format_version,
            });
        }
        let first = self.layers.first().ok_or(Error::CorruptFile("no layers"))?;
        if first.in_dim != self.input_dim {
            return Err(Error::DimMismatch {
                expected: self.input_dim,
                found: first.in_dim,
            });
        }
        for pair in self.layers.windows(2) {
            if pair[0].out_dim != pair[1].in_dim {
                return Err(Error::DimMismatch {
                    expected: pair[0].out_dim,
                    found: pair[1].in_dim,
                });
            }
        }
        let last = &self.layers[self.layers.len() - 1];
        if last.out_dim != self.output_dim {
            return Err(Error::DimMismatch {
                expected: self.output_dim,
                found: last.out_dim,
            });
        }
        let head_total: usize = self.heads.iter().sum();
        if head_total != self.output_dim {
            return Err(Error::DimMismatch {
                expected: self.output_dim,
                found: head_total,
            });
        }
        for l in &self.layers {
            if l.weights.len() != l.in_dim * l.out_dim {
                return Err(Error::DimMismatch {
                    expected: l.in_dim * l.out_dim,
                    found: l.weights.len(),
                });
            }
            if l.biases.len() != l.out_dim {
                return Err(Error::DimMismatch {
                    expected: l.out_dim,
                    found: l.biases.len(),
                });
            }
            if l.weights.iter().chain(&l.biases).any(|x| !x.is_finite()) {
                return Err(Error::CorruptFile("non-finite parameter"));
            }
        }
        Ok(())
    }

    /// Logits for one input. Deterministic; hidden layers use the activation,
    /// the last layer is linear.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_trace(x)?.pop().expect("at least one layer"))
    }

    /// Outputs of every layer (post-activation for hidden layers).
    pub(crate) fn forward_trace(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        if x.len() != self.input_dim {
            return Err(Error::DimMismatch {
                expected: self.input_dim,
                found: x.len(),
            });
        }
        let n = self.layers.len();
        let mut outs: Vec<Vec<f64>> = Vec::with_capacity(n);
        for (i, layer) in self.layers.iter().enumerate() {
            let input: &[f64] = if i == 0 { x } else { &outs[i - 1] };
            let mut out = Vec::with_capacity(layer.out_dim);
            layer.affine(input, &mut out);
            if i + 1 < n {
                for v in &mut out {
                    *v = self.activation.apply(*v);
                }
            }
            outs.push(out);
        }
        Ok(outs)
    }

    /// Softmax cross-entropy summed over heads for one example, adding the
    /// parameter gradient into `grads`. Returns the loss. Heads whose target
    /// is [`IGNORE_TARGET`] contribute nothing.
    pub fn accumulate_gradient(&self, x: &[f64], targets: &[usize], grads: &mut Gradients) -> Result<f64> {
        if targets.len() != self.heads.len() {
            return Err(Error::DimMismatch {
                expected: self.heads.len(),
                found: targets.len(),
            });
        }
        let outs = self.forward_trace(x)?;
        let logits = &outs[outs.len() - 1];
        let mut delta = alloc::vec![0.0; self.output_dim];
        let mut loss = 0.0;
        let mut offset = 0;
        for (&h, &t) in self.heads.iter().zip(targets) {
            if t == IGNORE_TARGET {
                offset += h;
                continue;
            }
            if t >= h {
                return Err(Error::DimMismatch { expected: h, found: t + 1 });
            }
            let group = &logits[offset..offset + h];
            let lse = math::log_sum_exp(group);
            loss += lse - group[t];
            for k in 0..h {
                delta[offset + k] = math::exp(group[k] - lse);
            }
            delta[offset + t] -= 1.0;
            offset += h;
        }
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            let input: &[f64] = if i == 0 { x } else { &outs[i - 1] };
            let g = &mut grads.layers[i];
            for o in 0..layer.out_dim {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                g.biases[o] += d;
                let row = &mut g.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                for (gw, xi) in row.iter_mut().zip(input) {
                    *gw += d * xi;
                }
            }
            if i > 0 {
                let mut prev = alloc::vec![0.0; layer.in_dim];
                for o in 0..layer.out_dim {
                    let d = delta[o];
                    if d == 0.0 {
                        continue;
                    }
                    let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                    for (p, w) in prev.iter_mut().zip(row) {
                        *p += d * w;
                    }
                }
                for (p, &y) in prev.iter_mut().zip(&outs[i - 1]) {
                    *p *= self.activation.derivative_from_output(y);
                }
                delta = prev;
            }
        }
        Ok(loss)
    }

    /// Loss only (used by the finite-difference oracle and evaluation).
    pub fn loss(&self, x: &[f64], targets: &[usize]) -> Result<f64> {
        let logits = self.forward(x)?;
        let mut loss = 0.0;
        let mut offset = 0;
        for (&h, &t) in self.heads.iter().zip(targets) {
            let group = &logits[offset..offset + h];
            if t != IGNORE_TARGET {
                loss += math::log_sum_exp(group) - group[t];
            }
            offset += h;
        }
        Ok(loss)
    }

    /// Flat mutable view over every parameter, layer by layer (weights then
    /// biases).
    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.biases.iter_mut()))
    }
}

impl Gradients {
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.biases.iter()).copied())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn ignored_head_adds_no_loss_or_gradient() {
        let mut rng = crate::rng::rng_from(3, &[]);
        let p = MlpParams::random_full(&[2, 4, 5], Activation::Tanh, vec![3, 2], 1.0, &mut rng);
        let x = [0.3, -0.7];
        let mut g = Gradients::zeros_like(&p);
        let loss = p.accumulate_gradient(&x, &[1, IGNORE_TARGET], &mut g).unwrap();
        let logits = p.forward(&x).unwrap();
        assert!((loss - (math::log_sum_exp(&logits[..3]) - logits[1])).abs() < 1e-12);
        assert_eq!(p.loss(&x, &[1, IGNORE_TARGET]).unwrap(), loss);
        let out = &g.layers[1];
        assert!(out.biases[3..].iter().all(|&b| b == 0.0));
        assert!(out.weights[3 * 4..].iter().all(|&w| w == 0.0));
    }

    #[test]
    fn zero_network_gives_zero_logits() {
        let p = MlpParams::zeros(&[3, 4, 2], Activation::Relu, vec![2]);
        assert_eq!(p.forward(&[1.0, -2.0, 3.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let mut p = MlpParams::zeros(&[3, 3], Activation::Relu, vec![3]);
        for i in 0..3 {
            p.layers[0].weights[i * 3 + i] = 1.0;
        }
        assert_eq!(p.forward(&[1.5, -2.0, 0.25]).unwrap(), vec![1.5, -2.0, 0.25]);
    }

    #[test]
    fn two_to_one_hand_arithmetic() {
        let mut p = MlpParams::zeros(&[2, 1], Activation::Relu, vec![1]);
        p.layers[0].weights = vec![1.0, 1.0];
        assert_eq!(p.forward(&[2.0, 3.0]).unwrap(), vec![5.0]);
    }

    #[test]
    fn wrong_input_width_is_rejected() {
        let p = MlpParams::zeros(&[2, 1], Activation::Relu, vec![1]);
        assert_eq!(
            p.forward(&[1.0]).unwrap_err(),
            Error::DimMismatch { expected: 2, found: 1 }
        );
    }

    #[test]
    fn validate_catches_broken_chain() {
        let mut p = MlpParams::zeros(&[3, 4, 2], Activation::Tanh, vec![2]);
        assert!(p.validate().is_ok());
        p.layers[1].in_dim = 5;
        assert!(matches!(p.validate(), Err(Error::DimMismatch { .. })));
        let mut q = MlpParams::zeros(&[3, 2], Activation::Tanh, vec![2]);
        q.format_version = 99;
        assert!(matches!(q.validate(), Err(Error::VersionMismatch { .. })));
    }
}

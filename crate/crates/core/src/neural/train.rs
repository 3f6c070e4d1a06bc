use alloc::vec::Vec;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{propose_probs, Activation, FeatureVector, Gradients, MlpParams, IGNORE_TARGET};
use crate::rng::rng_from;
use crate::{math, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Optimizer {
    SgdMomentum { momentum: f64 },
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub hidden_sizes: Vec<usize>,
    pub activation: Activation,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub weight_init_scale: f64,
    pub optimizer: Optimizer,
    /// Feed the model's own previous-step output back as input.
    pub recurrent: bool,
    pub eps_floor: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden_sizes: alloc::vec![128, 128],
            activation: Activation::Relu,
            learning_rate: 1e-3,
            batch_size: 64,
            epochs: 30,
            seed: 0,
            weight_init_scale: 1.0,
            optimizer: Optimizer::Adam {
                beta1: 0.9,
                beta2: 0.999,
                eps: 1e-8,
            },
            recurrent: true,
            eps_floor: crate::ipomdp::DEFAULT_EPS_FLOOR,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::InvalidConfig("learning rate, batch size and epochs must be positive"));
        }
        if !(self.weight_init_scale > 0.0) {
            return Err(Error::InvalidConfig("weight init scale must be positive"));
        }
        Ok(())
    }
}

/// One training sequence: features per step and one target per output head
/// per step.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSequence {
    pub features: Vec<FeatureVector>,
    pub targets: Vec<Vec<usize>>,
}

impl TrainingSequence {
    /// A sequence whose every step has the same single-head target.
    pub fn constant_target(features: Vec<FeatureVector>, target: usize) -> Self {
        let targets = alloc::vec![alloc::vec![target]; features.len()];
        Self { features, targets }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingLog {
    /// Mean loss over the training set before the first update.
    pub initial_loss: f64,
    /// Mean minibatch loss per epoch.
    pub epoch_loss: Vec<f64>,
    /// Held-out top-1 accuracy per epoch (first head), when a held-out set was supplied.
    pub heldout_accuracy: Vec<f64>,
}

/// Model inputs for every step: the features, followed by the model's own
/// output at the previous step (uniform at the first step) when `recurrent`.
pub fn recurrent_contexts(params: &MlpParams, seq: &TrainingSequence, recurrent: bool, eps_floor: f64) -> Result<Vec<Vec<f64>>> {
    if !recurrent {
        return Ok(seq.features.iter().map(|f| f.0.clone()).collect());
    }
    let mut prev = uniform_heads(params.heads());
    let mut out = Vec::with_capacity(seq.features.len());
    for f in &seq.features {
        out.push(f.concat(&prev));
        prev = propose_probs(params, f, &prev, eps_floor)?;
    }
    Ok(out)
}

pub(crate) fn uniform_heads(heads: &[usize]) -> Vec<f64> {
    heads
        .iter()
        .flat_map(|&h| core::iter::repeat_n(1.0 / h as f64, h))
        .collect()
}

struct OptState {
    step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

fn apply_update(params: &mut MlpParams, grads: &Gradients, cfg: &TrainConfig, st: &mut OptState) {
    st.step += 1;
    let lr = cfg.learning_rate;
    match cfg.optimizer {
        Optimizer::SgdMomentum { momentum } => {
            for ((p, g), m) in params.params_mut().zip(grads.values()).zip(st.m.iter_mut()) {
                *m = momentum * *m + g;
                *p -= lr * *m;
            }
        }
        Optimizer::Adam { beta1, beta2, eps } => {
            let t = st.step as f64;
            let c1 = 1.0 - libm::pow(beta1, t);
            let c2 = 1.0 - libm::pow(beta2, t);
            for (((p, g), m), v) in params
                .params_mut()
                .zip(grads.values())
                .zip(st.m.iter_mut())
                .zip(st.v.iter_mut())
            {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                *p -= lr * (*m / c1) / (math::sqrt(*v / c2) + eps);
            }
        }
    }
}

/// Proposal probabilities for every step of a feature sequence, feeding
/// each step's output back as the next step's context when `recurrent`.
pub fn proposal_sequence(
    params: &MlpParams,
    features: &[FeatureVector],
    recurrent: bool,
    eps_floor: f64,
) -> Result<Vec<Vec<f64>>> {
    let mut prev = if recurrent { uniform_heads(params.heads()) } else { Vec::new() };
    let mut out = Vec::with_capacity(features.len());
    for f in features {
        let p = propose_probs(params, f, &prev, eps_floor)?;
        if recurrent {
            prev.clone_from(&p);
        }
        out.push(p);
    }
    Ok(out)
}

/// Top-1 accuracy of the first head over every step of `data`.
pub fn accuracy(params: &MlpParams, data: &[TrainingSequence], recurrent: bool, eps_floor: f64) -> Result<f64> {
    let mut hits = 0usize;
    let mut total = 0usize;
    let h0 = params.heads()[0];
    for seq in data {
        for (x, t) in recurrent_contexts(params, seq, recurrent, eps_floor)?
            .iter()
            .zip(&seq.targets)
        {
            if t[0] == IGNORE_TARGET {
                continue;
            }
            let logits = params.forward(x)?;
            hits += usize::from(math::argmax(&logits[..h0]) == t[0]);
            total += 1;
        }
    }
    Ok(if total == 0 { 0.0 } else { hits as f64 / total as f64 })
}

/// Fits a recognition network by minibatch cross-entropy against sampled
/// ground-truth targets (the forward-KL objective up to a constant). Fully
/// deterministic given `(data, cfg)`. The recurrent context is refreshed
/// once per epoch from the current parameters; no gradient flows through it.
pub fn train_recognition(
    data: &[TrainingSequence],
    heads: &[usize],
    cfg: &TrainConfig,
    heldout: Option<&[TrainingSequence]>,
) -> Result<(MlpParams, TrainingLog)> {
    cfg.validate()?;
    let first = data
        .iter()
        .find_map(|s| s.features.first())
        .ok_or(Error::InvalidConfig("empty training set"))?;
    let feat_dim = first.len();
    for s in data {
        if s.features.len() != s.targets.len() {
            return Err(Error::DimMismatch {
                expected: s.features.len(),
                found: s.targets.len(),
            });
        }
        if let Some(f) = s.features.iter().find(|f| f.len() != feat_dim) {
            return Err(Error::DimMismatch {
                expected: feat_dim,
                found: f.len(),
            });
        }
    }
    let out_dim: usize = heads.iter().sum();
    let in_dim = feat_dim + if cfg.recurrent { out_dim } else { 0 };
    let mut dims = alloc::vec![in_dim];
    dims.extend_from_slice(&cfg.hidden_sizes);
    dims.push(out_dim);
    let mut params = MlpParams::random(
        &dims,
        cfg.activation,
        heads.to_vec(),
        cfg.weight_init_scale,
        &mut rng_from(cfg.seed, &[0]),
    );
    let n_params = params.num_params();
    let mut st = OptState {
        step: 0,
        m: alloc::vec![0.0; n_params],
        v: alloc::vec![0.0; n_params],
    };
    let mut grads = Gradients::zeros_like(&params);
    let mut log = TrainingLog::default();

    for epoch in 0..cfg.epochs {
        let mut samples: Vec<(Vec<f64>, &[usize])> = Vec::new();
        for seq in data {
            let inputs = recurrent_contexts(&params, seq, cfg.recurrent, cfg.eps_floor)?;
            samples.extend(inputs.into_iter().zip(seq.targets.iter().map(|t| t.as_slice())));
        }
        if epoch == 0 {
            let mut total = 0.0;
            for (x, t) in &samples {
                total += params.loss(x, t)?;
            }
            log.initial_loss = total / samples.len() as f64;
        }
        samples.shuffle(&mut rng_from(cfg.seed, &[1, epoch as u64]));
        let mut epoch_loss = 0.0;
        for (b, batch) in samples.chunks(cfg.batch_size).enumerate() {
            grads.clear();
            let mut batch_loss = 0.0;
            for (x, t) in batch {
                batch_loss += params.accumulate_gradient(x, t, &mut grads)?;
            }
            if !batch_loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b });
            }
            grads.scale(1.0 / batch.len() as f64);
            apply_update(&mut params, &grads, cfg, &mut st);
            epoch_loss += batch_loss;
        }
        log.epoch_loss.push(epoch_loss / samples.len() as f64);
        if let Some(h) = heldout {
            log.heldout_accuracy
                .push(accuracy(&params, h, cfg.recurrent, cfg.eps_floor)?);
        }
    }
    Ok((params, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn cfg(epochs: usize) -> TrainConfig {
        TrainConfig {
            hidden_sizes: vec![16],
            epochs,
            batch_size: 8,
            learning_rate: 1e-2,
            recurrent: false,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn memorizes_a_single_example() {
        let data = vec![TrainingSequence::constant_target(
            vec![FeatureVector::new(vec![0.5, -1.0, 2.0])],
            3,
        )];
        let (_, log) = train_recognition(&data, &[5], &cfg(300), None).unwrap();
        assert!(*log.epoch_loss.last().unwrap() < 0.1);
    }

    #[test]
    fn zero_output_layer_starts_at_log_k() {
        let data: Vec<_> = (0..45)
            .map(|g| TrainingSequence::constant_target(vec![FeatureVector::new(vec![g as f64 / 45.0, 1.0])], g))
            .collect();
        let (_, log) = train_recognition(&data, &[45], &cfg(1), None).unwrap();
        assert!((log.initial_loss - math::ln(45.0)).abs() < 1e-12);
        assert!((log.initial_loss - 3.807).abs() < 1e-3);
    }

    #[test]
    fn training_is_deterministic() {
        let data: Vec<_> = (0..20)
            .map(|i| {
                let x = i as f64 / 20.0;
                TrainingSequence::constant_target(
                    vec![FeatureVector::new(vec![x, 1.0 - x]), FeatureVector::new(vec![x * x, x])],
                    usize::from(x > 0.5),
                )
            })
            .collect();
        let c = TrainConfig {
            recurrent: true,
            ..cfg(5)
        };
        let (a, la) = train_recognition(&data, &[2], &c, Some(&data)).unwrap();
        let (b, lb) = train_recognition(&data, &[2], &c, Some(&data)).unwrap();
        assert_eq!(a, b);
        assert_eq!(la, lb);
        assert!(la.epoch_loss.last().unwrap() < &la.initial_loss);
    }

    #[test]
    fn empty_dataset_is_rejected() {
        assert!(train_recognition(&[], &[2], &cfg(1), None).is_err());
    }
}

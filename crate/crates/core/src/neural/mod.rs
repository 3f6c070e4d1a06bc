//! Feed-forward recognition networks: parameters, forward pass, backprop,
//! optimizers, the training loop and the proposal interface consumed by the
//! importance sampler.

mod mlp;
mod train;

pub use mlp::{Activation, Dense, FeatureVector, Gradients, MlpParams, FORMAT_VERSION, IGNORE_TARGET};
pub use train::{
    accuracy, proposal_sequence, recurrent_contexts, train_recognition, Optimizer, TrainConfig, TrainingLog, TrainingSequence,
};

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::inference::{HypothesisSpace, Posterior};
use crate::ipomdp::DEFAULT_EPS_FLOOR;
use crate::{math, Result};

/// Softmax of one logit group.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let lse = math::log_sum_exp(logits);
    logits.iter().map(|&l| math::exp(l - lse)).collect()
}

/// Goal-factor proposal: `softmax(forward(history ++ prev))` mixed with
/// `eps_floor` uniform mass, so every hypothesis keeps at least
/// `eps_floor / |space|`. Single-head models only.
pub fn propose_with_floor(
    params: &MlpParams,
    history: &FeatureVector,
    prev: &Posterior,
    space: Arc<HypothesisSpace>,
    eps_floor: f64,
) -> Result<Posterior> {
    let probs = propose_probs(params, history, prev.probs(), eps_floor)?;
    Posterior::new(space, probs)
}

/// [`propose_with_floor`] at the default floor, on `prev`'s space.
pub fn propose(params: &MlpParams, history: &FeatureVector, prev: &Posterior) -> Result<Posterior> {
    propose_with_floor(params, history, prev, prev.space_arc().clone(), DEFAULT_EPS_FLOOR)
}

/// Raw proposal probabilities (one vector per output head, concatenated).
pub fn propose_probs(
    params: &MlpParams,
    history: &FeatureVector,
    prev: &[f64],
    eps_floor: f64,
) -> Result<Vec<f64>> {
    let input = history.concat(prev);
    let logits = params.forward(&input)?;
    let mut out = Vec::with_capacity(logits.len());
    let mut offset = 0;
    for &h in params.heads() {
        let p = softmax(&logits[offset..offset + h]);
        let k = h as f64;
        out.extend(p.into_iter().map(|x| (1.0 - eps_floor) * x + eps_floor / k));
        offset += h;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from;
    use alloc::vec;
    use rand::Rng;

    #[test]
    fn zero_model_proposes_uniform() {
        let params = MlpParams::zeros(&[6, 4, 5], Activation::Relu, vec![5]);
        let space = Arc::new(HypothesisSpace::goals(1, 5));
        let prev = Posterior::uniform(space);
        let p = propose(&params, &FeatureVector::new(vec![0.3; 1]), &prev).unwrap();
        for &x in p.probs() {
            assert!((x - 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn proposals_are_normalized_and_floored() {
        let mut rng = rng_from(3, &[]);
        let params = MlpParams::random(&[12, 8, 3], Activation::Relu, vec![3], 4.0, &mut rng);
        let space = Arc::new(HypothesisSpace::goals(1, 3));
        for _ in 0..100 {
            let x: Vec<f64> = (0..9).map(|_| rng.gen_range(-50.0..50.0)).collect();
            let prev = Posterior::uniform(space.clone());
            let p = propose(&params, &FeatureVector::new(x), &prev).unwrap();
            assert!((p.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(p.probs().iter().all(|&q| q >= DEFAULT_EPS_FLOOR / 3.0 - 1e-15));
        }
    }

    #[test]
    fn wrong_history_width_is_a_dim_mismatch() {
        let params = MlpParams::zeros(&[4, 2], Activation::Relu, vec![2]);
        let prev = Posterior::uniform(Arc::new(HypothesisSpace::goals(1, 2)));
        let err = propose(&params, &FeatureVector::new(vec![1.0; 5]), &prev).unwrap_err();
        assert!(matches!(err, crate::Error::DimMismatch { .. }));
    }
}

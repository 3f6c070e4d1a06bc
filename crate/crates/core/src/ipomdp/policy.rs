use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::math;

/// Default Boltzmann inverse temperature for synthesized agents.
pub const DEFAULT_BETA: f64 = 3.0;
/// Default lower bound on any action's probability.
pub const DEFAULT_EPS_FLOOR: f64 = 1e-4;

// keeps beta * value well inside the exp range before stabilization
const VALUE_CLAMP: f64 = 1e12;

/// Categorical distribution over an environment's ordered action list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyDistribution {
    probs: Vec<f64>,
}

impl PolicyDistribution {
    /// Wraps probabilities that already sum to one.
    pub fn from_probs(probs: Vec<f64>) -> Self {
        debug_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        Self { probs }
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            probs: alloc::vec![1.0 / n as f64; n],
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, action: usize) -> f64 {
        self.probs[action]
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn argmax(&self) -> usize {
        math::argmax(&self.probs)
    }

    /// Weighted mixture of policies over the same action list.
    pub fn mixture<'a>(parts: impl IntoIterator<Item = (f64, &'a PolicyDistribution)>) -> Self {
        let mut probs: Vec<f64> = Vec::new();
        let mut total = 0.0;
        for (w, p) in parts {
            if probs.is_empty() {
                probs = alloc::vec![0.0; p.len()];
            }
            for (acc, &x) in probs.iter_mut().zip(&p.probs) {
                *acc += w * x;
            }
            total += w;
        }
        for x in &mut probs {
            *x /= total;
        }
        Self { probs }
    }

    /// Restricts the distribution to `legal` actions and renormalizes.
    pub fn restricted(&self, legal: &[bool]) -> Self {
        let total: f64 = self
            .probs
            .iter()
            .zip(legal)
            .filter(|(_, &l)| l)
            .map(|(p, _)| p)
            .sum();
        Self {
            probs: self
                .probs
                .iter()
                .zip(legal)
                .map(|(&p, &l)| if l { p / total } else { 0.0 })
                .collect(),
        }
    }

    /// Draws an action index given a uniform variate in `[0, 1)`.
    pub fn sample_with(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (i, &p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
    }
}

/// `softmax(beta * values)` mixed with uniform mass so that every entry is at
/// least `eps_floor`. Non-finite values are clamped.
pub fn boltzmann_policy(values: &[f64], beta: f64, eps_floor: f64) -> PolicyDistribution {
    let n = values.len();
    assert!(n > 0, "empty action set");
    assert!(beta > 0.0, "beta must be positive");
    let eps = eps_floor.clamp(0.0, 1.0 / n as f64);
    let logits: Vec<f64> = values
        .iter()
        .map(|&v| {
            let v = if v.is_nan() { 0.0 } else { v };
            beta * v.clamp(-VALUE_CLAMP, VALUE_CLAMP)
        })
        .collect();
    let lse = math::log_sum_exp(&logits);
    let scale = 1.0 - eps * n as f64;
    let probs = logits
        .iter()
        .map(|&l| scale * math::exp(l - lse) + eps)
        .collect();
    PolicyDistribution { probs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn equal_values_give_uniform() {
        let p = boltzmann_policy(&[0.4; 5], 3.0, 1e-4);
        for &x in p.probs() {
            assert!((x - 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn large_beta_approaches_point_mass_with_floor() {
        let p = boltzmann_policy(&[1.0, 0.0], 1e6, 1e-4);
        assert!(p.prob(1) >= 1e-4);
        assert!((p.prob(0) - (1.0 - 1e-4)).abs() < 1e-9);
    }

    #[test]
    fn closed_form_softmax_value() {
        let e2 = math::exp(2.0);
        let p = boltzmann_policy(&[1.0, 0.0], 2.0, 0.0);
        assert!((p.prob(0) - e2 / (e2 + 1.0)).abs() < 1e-12);
        assert!((p.prob(0) - 0.8808).abs() < 1e-4);
        assert!((p.prob(1) - 0.1192).abs() < 1e-4);
    }

    #[test]
    fn infinite_values_stay_finite() {
        let p = boltzmann_policy(&[f64::INFINITY, f64::NEG_INFINITY, 0.0], 3.0, 1e-4);
        assert!(p.probs().iter().all(|x| x.is_finite() && *x >= 1e-4));
        assert_eq!(p.argmax(), 0);
    }

    #[test]
    fn mixture_of_disjoint_modes_is_bimodal() {
        let a = PolicyDistribution::from_probs(vec![0.9, 0.1]);
        let b = PolicyDistribution::from_probs(vec![0.1, 0.9]);
        let m = PolicyDistribution::mixture([(0.5, &a), (0.5, &b)]);
        assert!((m.prob(0) - 0.5).abs() < 1e-12 && (m.prob(1) - 0.5).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn sums_to_one_and_respects_floor(
            values in proptest::collection::vec(-50.0f64..50.0, 1..8),
            beta in 0.01f64..20.0,
        ) {
            let p = boltzmann_policy(&values, beta, 1e-4);
            prop_assert!((p.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(p.probs().iter().all(|&x| x >= 1e-4 - 1e-15));
        }

        #[test]
        fn argmax_invariant_under_positive_rescaling(
            values in proptest::collection::vec(-10.0f64..10.0, 2..8),
            scale in 0.1f64..10.0,
            shift in -5.0f64..5.0,
        ) {
            let best = math::argmax(&values);
            let unique = values.iter().filter(|&&v| v == values[best]).count() == 1;
            prop_assume!(unique);
            let beta = 2.0;
            let rescaled: Vec<f64> = values.iter().map(|v| scale * v + shift).collect();
            let p1 = boltzmann_policy(&values, beta, 1e-4);
            // same beta * scale product as the original
            let p2 = boltzmann_policy(&rescaled, beta / scale, 1e-4);
            prop_assert_eq!(p1.argmax(), best);
            prop_assert_eq!(p2.argmax(), best);
        }
    }
}

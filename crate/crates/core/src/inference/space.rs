use alloc::sync::Arc;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::{math, Error, Result};

/// One entry of a hypothesis space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hypothesis {
    /// A goal of the modeled agent (level 1).
    Goal(u32),
    /// A goal of the level-1 agent together with a lower-level hypothesis
    /// that seeds its belief (level 2).
    Joint { upper: u32, lower: u32 },
}

/// An ordered hypothesis space. The index of an entry is its hypothesis id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypothesisSpace {
    level: usize,
    entries: Vec<Hypothesis>,
    lower_size: usize,
}

impl HypothesisSpace {
    pub fn goals(level: usize, n: usize) -> Self {
        assert!(n > 0, "hypothesis space must be nonempty");
        Self {
            level,
            entries: (0..n as u32).map(Hypothesis::Goal).collect(),
            lower_size: n,
        }
    }

    /// Joint space `upper x lower`, id = `upper * n_lower + lower`.
    pub fn joint(n_upper: usize, n_lower: usize) -> Self {
        assert!(n_upper > 0 && n_lower > 0, "hypothesis space must be nonempty");
        let entries = (0..n_upper as u32)
            .flat_map(|u| (0..n_lower as u32).map(move |l| Hypothesis::Joint { upper: u, lower: l }))
            .collect();
        Self {
            level: 2,
            entries,
            lower_size: n_lower,
        }
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Hypothesis] {
        &self.entries
    }

    pub fn lower_size(&self) -> usize {
        self.lower_size
    }

    pub fn upper_size(&self) -> usize {
        self.entries.len() / self.lower_size
    }

    pub fn joint_id(&self, upper: usize, lower: usize) -> usize {
        upper * self.lower_size + lower
    }
}

/// Categorical distribution aligned to a [`HypothesisSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    space: Arc<HypothesisSpace>,
    probs: Vec<f64>,
}

impl Posterior {
    /// Wraps probabilities that must already sum to one (within `1e-9`).
    pub fn new(space: Arc<HypothesisSpace>, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != space.len() {
            return Err(Error::DimMismatch {
                expected: space.len(),
                found: probs.len(),
            });
        }
        let total: f64 = probs.iter().sum();
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig("posterior must be a normalized distribution"));
        }
        Ok(Self { space, probs })
    }

    /// Normalizes non-negative weights.
    pub fn from_weights(space: Arc<HypothesisSpace>, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != space.len() {
            return Err(Error::DimMismatch {
                expected: space.len(),
                found: weights.len(),
            });
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::AllWeightsZero);
        }
        Ok(Self {
            space,
            probs: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    pub fn uniform(space: Arc<HypothesisSpace>) -> Self {
        let n = space.len();
        Self {
            space,
            probs: alloc::vec![1.0 / n as f64; n],
        }
    }

    pub fn space(&self) -> &HypothesisSpace {
        &self.space
    }

    pub fn space_arc(&self) -> &Arc<HypothesisSpace> {
        &self.space
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Most probable hypothesis id; ties go to the lower id.
    pub fn argmax(&self) -> usize {
        math::argmax(&self.probs)
    }

    /// Entries floored at `eps` and renormalized.
    pub fn smoothed(&self, eps: f64) -> Self {
        let floored: Vec<f64> = self.probs.iter().map(|&p| p.max(eps)).collect();
        let total: f64 = floored.iter().sum();
        Self {
            space: self.space.clone(),
            probs: floored.into_iter().map(|p| p / total).collect(),
        }
    }

    /// Marginal over the upper (level-1 agent) goal of a joint posterior.
    pub fn upper_marginal(&self) -> Vec<f64> {
        let lower = self.space.lower_size();
        self.probs.chunks(lower).map(|c| c.iter().sum()).collect()
    }

    /// Marginal over the lower hypotheses of a joint posterior.
    pub fn lower_marginal(&self) -> Vec<f64> {
        let lower = self.space.lower_size();
        let mut out = alloc::vec![0.0; lower];
        for chunk in self.probs.chunks(lower) {
            for (o, p) in out.iter_mut().zip(chunk) {
                *o += p;
            }
        }
        out
    }

    /// Maximum absolute elementwise difference to another posterior.
    pub fn max_abs_diff(&self, other: &Posterior) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn joint_space_ids_are_row_major() {
        let s = HypothesisSpace::joint(2, 45);
        assert_eq!(s.len(), 90);
        assert_eq!(s.entries()[s.joint_id(1, 3)], Hypothesis::Joint { upper: 1, lower: 3 });
        assert_eq!(s.upper_size(), 2);
    }

    #[test]
    fn marginals_sum_rows_and_columns() {
        let s = Arc::new(HypothesisSpace::joint(2, 2));
        let p = Posterior::new(s, alloc::vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let up = p.upper_marginal();
        let lo = p.lower_marginal();
        assert!((up[0] - 0.3).abs() < 1e-12 && (up[1] - 0.7).abs() < 1e-12);
        assert!((lo[0] - 0.4).abs() < 1e-12 && (lo[1] - 0.6).abs() < 1e-12);
    }

    #[test]
    fn unnormalized_probs_are_rejected() {
        let s = Arc::new(HypothesisSpace::goals(1, 2));
        assert!(Posterior::new(s.clone(), alloc::vec![0.5, 0.6]).is_err());
        assert_eq!(
            Posterior::from_weights(s, alloc::vec![0.0, 0.0]).unwrap_err(),
            Error::AllWeightsZero
        );
    }
}

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use super::model::{ComputeCounter, NestedGoalModel};
use super::space::{HypothesisSpace, Posterior};
use crate::ipomdp::PolicyDistribution;
use crate::{math, Error, Result};

/// Output of an exact or sampled inference call.
#[derive(Debug, Clone)]
pub struct Inference {
    pub posterior: Posterior,
    /// Unnormalized weight accumulated on each hypothesis.
    pub raw_weights: Vec<f64>,
    /// The upper agent's belief after the prefix, as `(lower hypothesis,
    /// weight)` pairs (level 2 only).
    pub lower_belief: Vec<(usize, f64)>,
    pub compute: ComputeCounter,
    pub ess: f64,
    /// Set when every weight vanished and the posterior fell back to uniform
    /// over the sampled hypotheses.
    pub all_weights_zero: bool,
    /// Steps at which the upper agent's belief lost every particle and was
    /// reset to uniform.
    pub nested_resets: u64,
}

pub(crate) fn log_prob(p: f64) -> f64 {
    if p > 0.0 {
        math::ln(p)
    } else {
        f64::NEG_INFINITY
    }
}

/// Cumulative log likelihood of lower hypothesis `h` for every prefix
/// length `0..=n`.
pub(crate) fn lower_prefix_logs<M: NestedGoalModel + ?Sized>(model: &M, h: usize, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(acc);
    for tau in 0..n {
        acc += log_prob(model.lower_likelihood(tau, h));
        out.push(acc);
    }
    out
}

/// Normalizes log weights into `(key, weight)` pairs. Returns `None` when
/// every weight is zero.
pub(crate) fn normalize_logs(keys: &[usize], logs: &[f64]) -> Option<Vec<(usize, f64)>> {
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return None;
    }
    let ws: Vec<f64> = logs.iter().map(|&l| math::exp(l - max)).collect();
    let total: f64 = ws.iter().sum();
    Some(keys.iter().zip(ws).map(|(&k, w)| (k, w / total)).collect())
}

pub(crate) fn ess(weights: &[f64]) -> f64 {
    let s: f64 = weights.iter().sum();
    let s2: f64 = weights.iter().map(|w| w * w).sum();
    if s2 > 0.0 {
        s * s / s2
    } else {
        0.0
    }
}

fn check_prefix<M: NestedGoalModel + ?Sized>(model: &M, n: usize) -> Result<()> {
    if n > model.steps() {
        return Err(Error::InvalidConfig("prefix longer than the episode"));
    }
    Ok(())
}

/// Exact posterior by enumerating every hypothesis.
///
/// Level 1 ranges over lower hypotheses; level 2 over `(upper goal, lower
/// hypothesis)` pairs, where the upper agent's belief at each step is the
/// exact level-1 posterior at that step. Priors are uniform.
pub fn exact_posterior<M: NestedGoalModel + ?Sized>(model: &M, level: usize, n: usize) -> Result<Inference> {
    check_prefix(model, n)?;
    let n_lower = model.lower_size();
    let mut compute = ComputeCounter::default();
    let prefix: Vec<Vec<f64>> = (0..n_lower).map(|h| lower_prefix_logs(model, h, n)).collect();
    compute.lower += (n * n_lower) as u64;
    let keys: Vec<usize> = (0..n_lower).collect();
    let lower_at = |tau: usize| -> Vec<f64> { prefix.iter().map(|p| p[tau]).collect() };
    match level {
        1 => {
            let space = Arc::new(HypothesisSpace::goals(1, n_lower));
            finish(space, lower_at(n), compute, Vec::new(), 0)
        }
        2 => {
            let n_upper = model.upper_size();
            let mut upper_logs = vec![0.0; n_upper];
            let mut resets = 0;
            for tau in 0..n {
                let belief = normalize_logs(&keys, &lower_at(tau)).unwrap_or_else(|| {
                    resets += 1;
                    uniform_pairs(&keys)
                });
                for (g, lw) in upper_logs.iter_mut().enumerate() {
                    *lw += log_prob(model.upper_likelihood(tau, &belief, g));
                }
                compute.upper += n_upper as u64;
                compute.nested += (n_upper * n_lower) as u64;
            }
            let lower_n = lower_at(n);
            let belief = normalize_logs(&keys, &lower_n).unwrap_or_else(|| uniform_pairs(&keys));
            let space = Arc::new(HypothesisSpace::joint(n_upper, n_lower));
            let logs = upper_logs
                .iter()
                .flat_map(|&u| lower_n.iter().map(move |&l| u + l))
                .collect();
            finish(space, logs, compute, belief, resets)
        }
        other => Err(Error::UnsupportedLevel(other)),
    }
}

pub(crate) fn uniform_pairs(keys: &[usize]) -> Vec<(usize, f64)> {
    let w = 1.0 / keys.len() as f64;
    keys.iter().map(|&k| (k, w)).collect()
}

fn finish(
    space: Arc<HypothesisSpace>,
    logs: Vec<f64>,
    compute: ComputeCounter,
    lower_belief: Vec<(usize, f64)>,
    nested_resets: u64,
) -> Result<Inference> {
    let raw: Vec<f64> = logs.iter().map(|&l| math::exp(l)).collect();
    let keys: Vec<usize> = (0..logs.len()).collect();
    let (posterior, all_zero) = match normalize_logs(&keys, &logs) {
        Some(pairs) => (Posterior::new(space, pairs.into_iter().map(|(_, w)| w).collect())?, false),
        None => (Posterior::uniform(space), true),
    };
    let ess = ess(posterior.probs());
    Ok(Inference {
        posterior,
        raw_weights: raw,
        lower_belief,
        compute,
        ess,
        all_weights_zero: all_zero,
        nested_resets,
    })
}

/// Predicted distribution of the upper agent's action at step `n`: its
/// policy under the inferred belief, mixed over the posterior on its goal.
pub fn predict_action<M: NestedGoalModel + ?Sized>(model: &M, n: usize, inference: &Inference) -> PolicyDistribution {
    let upper = inference.posterior.upper_marginal();
    let policies: Vec<(f64, PolicyDistribution)> = upper
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(g, &p)| (p, model.upper_policy(n, &inference.lower_belief, g)))
        .collect();
    PolicyDistribution::mixture(policies.iter().map(|(p, d)| (*p, d)))
}

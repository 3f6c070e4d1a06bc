use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

use super::exact::{ess, log_prob, lower_prefix_logs, normalize_logs, uniform_pairs, Inference};
use crate::rng::rng_from;
use super::model::{ComputeCounter, NestedGoalModel};
use super::space::{HypothesisSpace, Posterior};
use crate::sampling::{independent, stratified_without_replacement, Draw};
use crate::{math, Error, Result};

/// Particle budget and sampling scheme of one importance-sampling call.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplerConfig {
    /// Lower-hypothesis particles: the whole budget at level 1, the lower
    /// half of the joint particles at level 2.
    pub n_lower: usize,
    /// Upper-goal particles (level 2); joint particles are the cross product
    /// of upper and lower draws.
    pub n_upper: usize,
    /// Particles approximating the upper agent's belief at each step
    /// (level 2).
    pub n_nested: usize,
    /// Draw without replacement by systematic sampling (exhaustive when the
    /// budget covers the space) instead of i.i.d.
    pub stratified: bool,
}

/// Proposal distributions for a prefix of `n` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposals {
    /// Over lower hypotheses, at the end of the prefix.
    pub lower: Vec<f64>,
    /// Over upper goals, at the end of the prefix.
    pub upper: Vec<f64>,
    /// Over lower hypotheses after each prefix `0..=n`, used to draw the
    /// upper agent's belief at that step. Empty means "reuse `lower`".
    pub nested: Vec<Vec<f64>>,
}

impl Proposals {
    pub fn uniform(n_lower: usize, n_upper: usize) -> Self {
        Self {
            lower: vec![1.0 / n_lower as f64; n_lower],
            upper: vec![1.0 / n_upper as f64; n_upper],
            nested: Vec::new(),
        }
    }

    fn nested_at(&self, tau: usize) -> &[f64] {
        self.nested.get(tau).map_or(&self.lower, |q| q)
    }
}

/// Lazily extended cumulative log likelihoods of lower hypotheses; counts
/// every distinct policy evaluation.
struct LowerCache<'a, M: ?Sized> {
    model: &'a M,
    cumulative: Vec<Vec<f64>>,
    evaluations: u64,
}

impl<'a, M: NestedGoalModel + ?Sized> LowerCache<'a, M> {
    fn new(model: &'a M) -> Self {
        Self {
            model,
            cumulative: vec![vec![0.0]; model.lower_size()],
            evaluations: 0,
        }
    }

    /// Log likelihood of the first `tau` steps under `h`.
    fn prefix(&mut self, h: usize, tau: usize) -> f64 {
        let c = &mut self.cumulative[h];
        while c.len() <= tau {
            let t = c.len() - 1;
            let next = c[t] + log_prob(self.model.lower_likelihood(t, h));
            c.push(next);
            self.evaluations += 1;
        }
        c[tau]
    }
}

/// A sampled joint hypothesis with the nested belief it induces at every
/// step of the prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleTrajectory {
    pub upper: usize,
    pub lower: usize,
    /// Upper agent's belief before each step `0..n`.
    pub beliefs: Vec<Vec<(usize, f64)>>,
    /// Density the particle was drawn with (proposal probability, or
    /// inclusion probability when sampling without replacement).
    pub density: f64,
}

/// Log of the unnormalized importance weight of a level-2 particle over a
/// prefix of `beliefs.len()` steps: its likelihood under the lower and upper
/// policies divided by its proposal density.
pub fn compute_weight<M: NestedGoalModel + ?Sized>(model: &M, particle: &ParticleTrajectory) -> f64 {
    let n = particle.beliefs.len();
    let lower = lower_prefix_logs(model, particle.lower, n)[n];
    let upper: f64 = particle
        .beliefs
        .iter()
        .enumerate()
        .map(|(tau, b)| log_prob(model.upper_likelihood(tau, b, particle.upper)))
        .sum();
    lower + upper - math::ln(particle.density)
}

fn draw<R: Rng + ?Sized>(q: &[f64], n: usize, stratified: bool, rng: &mut R) -> Vec<Draw> {
    if stratified {
        stratified_without_replacement(q, n, rng)
    } else {
        independent(q, n, rng)
    }
}

fn check(q: &[f64], size: usize, budget: usize) -> Result<()> {
    if q.len() != size {
        return Err(Error::DimMismatch {
            expected: size,
            found: q.len(),
        });
    }
    if budget == 0 {
        return Err(Error::InvalidConfig("particle budget must be positive"));
    }
    Ok(())
}

/// Importance-sampled posterior after a prefix of `n` steps.
///
/// Level 1 draws lower hypotheses and weights them by likelihood over
/// proposal density. Level 2 crosses upper-goal draws with lower draws; the
/// upper agent's belief before each step `tau` is itself approximated by
/// particles drawn from the nested proposal at `tau` and weighted the same
/// way. Nested draws at all steps share one uniform variate, so consecutive
/// steps mostly reuse the same hypotheses and their cached likelihoods.
pub fn importance_sample<M: NestedGoalModel + ?Sized, R: Rng + ?Sized>(
    model: &M,
    level: usize,
    n: usize,
    proposals: &Proposals,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<Inference> {
    if n > model.steps() {
        return Err(Error::InvalidConfig("prefix longer than the episode"));
    }
    if !(1..=2).contains(&level) {
        return Err(Error::UnsupportedLevel(level));
    }
    let n_lower = model.lower_size();
    check(&proposals.lower, n_lower, cfg.n_lower)?;
    let mut cache = LowerCache::new(model);
    let lower_draws = draw(&proposals.lower, cfg.n_lower, cfg.stratified, rng);
    let lower_logs: Vec<f64> = lower_draws
        .iter()
        .map(|d| cache.prefix(d.index, n) - math::ln(d.density))
        .collect();
    let lower_ids: Vec<usize> = lower_draws.iter().map(|d| d.index).collect();

    if level == 1 {
        let space = Arc::new(HypothesisSpace::goals(1, n_lower));
        let compute = ComputeCounter {
            lower: cache.evaluations,
            ..ComputeCounter::default()
        };
        return aggregate(space, &lower_ids, &lower_logs, compute, Vec::new(), 0);
    }

    let n_upper = model.upper_size();
    check(&proposals.upper, n_upper, cfg.n_upper)?;
    if cfg.n_nested == 0 {
        return Err(Error::InvalidConfig("particle budget must be positive"));
    }
    for tau in 0..=n {
        let q = proposals.nested_at(tau);
        if q.len() != n_lower {
            return Err(Error::DimMismatch {
                expected: n_lower,
                found: q.len(),
            });
        }
    }
    let upper_draws = draw(&proposals.upper, cfg.n_upper, cfg.stratified, rng);
    let nested_seed: u64 = rng.gen();
    let mut resets = 0;
    let mut nested_belief = |tau: usize, cache: &mut LowerCache<'_, M>| -> Vec<(usize, f64)> {
        let draws = draw(
            proposals.nested_at(tau),
            cfg.n_nested,
            cfg.stratified,
            &mut rng_from(nested_seed, &[]),
        );
        let keys: Vec<usize> = draws.iter().map(|d| d.index).collect();
        let logs: Vec<f64> = draws
            .iter()
            .map(|d| cache.prefix(d.index, tau) - math::ln(d.density))
            .collect();
        normalize_logs(&keys, &logs).unwrap_or_else(|| {
            resets += 1;
            uniform_pairs(&keys)
        })
    };
    let beliefs: Vec<Vec<(usize, f64)>> = (0..n).map(|tau| nested_belief(tau, &mut cache)).collect();
    let final_belief = nested_belief(n, &mut cache);
    let upper_logs: Vec<f64> = upper_draws
        .iter()
        .map(|d| {
            let l: f64 = beliefs
                .iter()
                .enumerate()
                .map(|(tau, b)| log_prob(model.upper_likelihood(tau, b, d.index)))
                .sum();
            l - math::ln(d.density)
        })
        .collect();
    let compute = ComputeCounter {
        lower: cache.evaluations,
        upper: (n * upper_draws.len()) as u64,
        nested: (upper_draws.len() * beliefs.iter().map(Vec::len).sum::<usize>()) as u64,
    };

    let space = Arc::new(HypothesisSpace::joint(n_upper, n_lower));
    let mut ids = Vec::with_capacity(upper_draws.len() * lower_draws.len());
    let mut logs = Vec::with_capacity(ids.capacity());
    for (u, ul) in upper_draws.iter().zip(&upper_logs) {
        for (l, ll) in lower_draws.iter().zip(&lower_logs) {
            ids.push(space.joint_id(u.index, l.index));
            logs.push(ul + ll);
        }
    }
    aggregate(space, &ids, &logs, compute, final_belief, resets)
}

fn aggregate(
    space: Arc<HypothesisSpace>,
    ids: &[usize],
    logs: &[f64],
    compute: ComputeCounter,
    lower_belief: Vec<(usize, f64)>,
    nested_resets: u64,
) -> Result<Inference> {
    let mut raw = vec![0.0; space.len()];
    for (&id, &l) in ids.iter().zip(logs) {
        raw[id] += math::exp(l);
    }
    let (probs, particle_ess, all_zero) = match normalize_logs(ids, logs) {
        Some(pairs) => {
            let mut probs = vec![0.0; space.len()];
            let ws: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            for (id, w) in pairs {
                probs[id] += w;
            }
            (probs, ess(&ws), false)
        }
        None => {
            let mut probs = vec![0.0; space.len()];
            let mut distinct: Vec<usize> = ids.to_vec();
            distinct.sort_unstable();
            distinct.dedup();
            for &id in &distinct {
                probs[id] = 1.0 / distinct.len() as f64;
            }
            (probs, 0.0, true)
        }
    };
    let total: f64 = probs.iter().sum();
    let probs = probs.into_iter().map(|p| p / total).collect();
    Ok(Inference {
        posterior: Posterior::new(space, probs)?,
        raw_weights: raw,
        lower_belief,
        compute,
        ess: particle_ess,
        all_weights_zero: all_zero,
        nested_resets,
    })
}

//! Sampling from categorical proposals over finite hypothesis spaces.

use alloc::vec::Vec;
use rand::Rng;

/// One hypothesis drawn from a proposal, with the quantity its importance
/// weight is divided by: the inclusion probability under stratified
/// sampling, or the proposal mass under independent draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Draw {
    pub index: usize,
    pub density: f64,
}

/// Inclusion probabilities `pi_i = min(1, c * q_i)` with `sum pi = n`,
/// found by iteratively capping the largest entries at one.
pub fn inclusion_probabilities(q: &[f64], n: usize) -> Vec<f64> {
    let k = q.len();
    assert!(n >= 1 && n <= k, "sample size must lie in 1..=|space|");
    let mut pi = alloc::vec![0.0; k];
    let mut capped = alloc::vec![false; k];
    loop {
        let free_mass: f64 = (0..k).filter(|&i| !capped[i]).map(|i| q[i]).sum();
        let free_slots = n - capped.iter().filter(|&&c| c).count();
        let mut changed = false;
        for i in 0..k {
            if capped[i] {
                pi[i] = 1.0;
                continue;
            }
            pi[i] = if free_mass > 0.0 {
                q[i] * free_slots as f64 / free_mass
            } else {
                free_slots as f64 / (k - (n - free_slots)) as f64
            };
            if pi[i] >= 1.0 {
                capped[i] = true;
                changed = true;
            }
        }
        if !changed {
            return pi;
        }
    }
}

/// Systematic sampling without replacement: returns exactly `n` distinct
/// indices in increasing order, index `i` appearing with probability
/// `inclusion_probabilities(q, n)[i]`. With `n == q.len()` every index is
/// returned with inclusion probability one.
pub fn stratified_without_replacement<R: Rng + ?Sized>(q: &[f64], n: usize, rng: &mut R) -> Vec<Draw> {
    let pi = inclusion_probabilities(q, n);
    if n == q.len() {
        return (0..n).map(|i| Draw { index: i, density: 1.0 }).collect();
    }
    let u: f64 = rng.gen::<f64>();
    let mut draws = Vec::with_capacity(n);
    let mut lo = 0.0;
    let mut next = u;
    for (i, &p) in pi.iter().enumerate() {
        let hi = lo + p;
        if next < hi && draws.len() < n {
            draws.push(Draw { index: i, density: p });
            next += 1.0;
        }
        lo = hi;
    }
    // floating-point shortfall at the top of the last stratum
    let mut i = pi.len();
    while draws.len() < n && i > 0 {
        i -= 1;
        if !draws.iter().any(|d| d.index == i) {
            draws.push(Draw { index: i, density: pi[i] });
        }
    }
    draws.sort_by_key(|d| d.index);
    draws
}

/// `n` independent draws with replacement; the density is the proposal mass.
pub fn independent<R: Rng + ?Sized>(q: &[f64], n: usize, rng: &mut R) -> Vec<Draw> {
    (0..n)
        .map(|_| {
            let index = categorical(q, rng.gen::<f64>());
            Draw {
                index,
                density: q[index],
            }
        })
        .collect()
}

/// Inverse-CDF draw from unnormalized-safe probabilities given `u` in `[0, 1)`.
pub fn categorical(q: &[f64], u: f64) -> usize {
    let total: f64 = q.iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    for (i, &p) in q.iter().enumerate() {
        acc += p;
        if target < acc {
            return i;
        }
    }
    q.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from;
    use proptest::prelude::*;

    #[test]
    fn full_sample_returns_every_index_once() {
        let q = [0.5, 0.2, 0.3];
        let d = stratified_without_replacement(&q, 3, &mut rng_from(1, &[]));
        assert_eq!(d.iter().map(|d| d.index).collect::<Vec<_>>(), [0, 1, 2]);
        assert!(d.iter().all(|d| d.density == 1.0));
    }

    #[test]
    fn large_entries_are_capped_at_one() {
        let pi = inclusion_probabilities(&[0.9, 0.05, 0.05], 2);
        assert_eq!(pi[0], 1.0);
        assert!((pi[1] - 0.5).abs() < 1e-12 && (pi[2] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn empirical_inclusion_matches_target() {
        let q = [0.4, 0.3, 0.15, 0.1, 0.05];
        let pi = inclusion_probabilities(&q, 2);
        let mut counts = [0usize; 5];
        let mut rng = rng_from(11, &[]);
        let trials = 20_000;
        for _ in 0..trials {
            for d in stratified_without_replacement(&q, 2, &mut rng) {
                counts[d.index] += 1;
            }
        }
        for i in 0..5 {
            let freq = counts[i] as f64 / trials as f64;
            let se = (pi[i] * (1.0 - pi[i]) / trials as f64).sqrt().max(1e-3);
            assert!((freq - pi[i]).abs() < 5.0 * se, "index {i}: {freq} vs {}", pi[i]);
        }
    }

    proptest! {
        #[test]
        fn draws_are_distinct_and_exact_in_count(
            raw in proptest::collection::vec(0.001f64..1.0, 1..40),
            frac in 0.0f64..1.0,
            seed in any::<u64>(),
        ) {
            let n = 1 + ((raw.len() - 1) as f64 * frac) as usize;
            let pi = inclusion_probabilities(&raw, n);
            prop_assert!((pi.iter().sum::<f64>() - n as f64).abs() < 1e-9);
            let d = stratified_without_replacement(&raw, n, &mut rng_from(seed, &[]));
            prop_assert_eq!(d.len(), n);
            for w in d.windows(2) {
                prop_assert!(w[0].index < w[1].index);
            }
        }
    }
}

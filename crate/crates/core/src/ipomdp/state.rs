use alloc::boxed::Box;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Index into an environment's finite, ordered goal space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Goal(pub u32);

impl Goal {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// The modeled agent's part of a level-ℓ interactive state (ℓ ≥ 1).
#[derive(Debug, Clone, PartialEq)]
pub struct Nested<S> {
    pub belief: ParticleBelief<S>,
    pub other_goal: Goal,
}

/// A level-indexed hypothesis: the world state plus, for ℓ ≥ 1, the other
/// agent's level-(ℓ-1) belief and its goal.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractiveState<S> {
    level: usize,
    world: S,
    nested: Option<Box<Nested<S>>>,
}

impl<S> InteractiveState<S> {
    pub fn level0(world: S) -> Self {
        Self {
            level: 0,
            world,
            nested: None,
        }
    }

    /// Builds a level-(ℓ+1) state from a belief whose particles are all level ℓ.
    pub fn nested(world: S, belief: ParticleBelief<S>, other_goal: Goal) -> Result<Self> {
        let level = belief.level() + 1;
        Ok(Self {
            level,
            world,
            nested: Some(Box::new(Nested { belief, other_goal })),
        })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn world(&self) -> &S {
        &self.world
    }

    pub fn world_mut(&mut self) -> &mut S {
        &mut self.world
    }

    pub fn lower_belief(&self) -> Option<&ParticleBelief<S>> {
        self.nested.as_ref().map(|n| &n.belief)
    }

    pub fn other_goal(&self) -> Option<Goal> {
        self.nested.as_ref().map(|n| n.other_goal)
    }

    pub fn nested_part(&self) -> Option<&Nested<S>> {
        self.nested.as_deref()
    }

    pub(crate) fn nested_mut(&mut self) -> Option<&mut Nested<S>> {
        self.nested.as_deref_mut()
    }

    /// Number of nested belief layers, following the first particle of each
    /// layer. Equals `level()` for a well-formed state.
    pub fn depth(&self) -> usize {
        match &self.nested {
            None => 0,
            Some(n) => 1 + n.belief.particles()[0].state.depth(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedParticle<S> {
    pub state: InteractiveState<S>,
    pub weight: f64,
}

impl<S> WeightedParticle<S> {
    pub fn new(state: InteractiveState<S>, weight: f64) -> Self {
        Self { state, weight }
    }
}

/// A normalized, nonempty set of weighted interactive-state particles that
/// all share one level.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleBelief<S> {
    particles: Vec<WeightedParticle<S>>,
}

impl<S> ParticleBelief<S> {
    pub fn particles(&self) -> &[WeightedParticle<S>] {
        &self.particles
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn level(&self) -> usize {
        self.particles[0].state.level()
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.particles.iter().map(|p| p.weight)
    }

    pub fn into_particles(self) -> Vec<WeightedParticle<S>> {
        self.particles
    }

    /// Equal weights over the given states.
    pub fn uniform(states: Vec<InteractiveState<S>>) -> Result<Self> {
        let n = states.len();
        if n == 0 {
            return Err(Error::AllWeightsZero);
        }
        normalize(
            states
                .into_iter()
                .map(|s| WeightedParticle::new(s, 1.0))
                .collect(),
        )
    }

    /// Resets every weight to `1/N`, keeping the particles.
    pub fn reset_uniform(mut self) -> Self {
        let w = 1.0 / self.particles.len() as f64;
        for p in &mut self.particles {
            p.weight = w;
        }
        self
    }

    /// Effective sample size `1 / sum(w^2)`.
    pub fn effective_sample_size(&self) -> f64 {
        1.0 / self.particles.iter().map(|p| p.weight * p.weight).sum::<f64>()
    }
}

/// Rescales weights to sum to one, preserving order. Inputs whose weights
/// already sum to one within `1e-12` are returned untouched, which makes the
/// operation exactly idempotent.
pub fn normalize<S>(mut particles: Vec<WeightedParticle<S>>) -> Result<ParticleBelief<S>> {
    if particles.is_empty() {
        return Err(Error::AllWeightsZero);
    }
    if particles
        .iter()
        .any(|p| !(p.weight.is_finite() && p.weight >= 0.0))
    {
        return Err(Error::InvalidConfig("particle weights must be finite and non-negative"));
    }
    let level = particles[0].state.level();
    if particles.iter().any(|p| p.state.level() != level) {
        return Err(Error::InvalidConfig("particles in one belief must share a level"));
    }
    let total: f64 = particles.iter().map(|p| p.weight).sum();
    if !(total > 0.0) {
        return Err(Error::AllWeightsZero);
    }
    if (total - 1.0).abs() > 1e-12 {
        for p in &mut particles {
            p.weight /= total;
        }
    }
    Ok(ParticleBelief { particles })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn p(tag: u32, w: f64) -> WeightedParticle<u32> {
        WeightedParticle::new(InteractiveState::level0(tag), w)
    }

    #[test]
    fn normalize_symmetric_pair() {
        let b = normalize(vec![p(1, 2.0), p(2, 2.0)]).unwrap();
        assert_eq!(b.weights().collect::<Vec<_>>(), vec![0.5, 0.5]);
        assert_eq!(*b.particles()[0].state.world(), 1);
    }

    #[test]
    fn normalize_single_particle() {
        let b = normalize(vec![p(1, 3.0)]).unwrap();
        assert_eq!(b.particles()[0].weight, 1.0);
    }

    #[test]
    fn normalize_all_zero_is_an_error() {
        assert_eq!(
            normalize(vec![p(1, 0.0), p(2, 0.0)]).unwrap_err(),
            Error::AllWeightsZero
        );
        assert_eq!(normalize::<u32>(vec![]).unwrap_err(), Error::AllWeightsZero);
    }

    fn build(level: usize) -> InteractiveState<u32> {
        if level == 0 {
            return InteractiveState::level0(0);
        }
        let lower = ParticleBelief::uniform(vec![build(level - 1), build(level - 1)]).unwrap();
        InteractiveState::nested(level as u32, lower, Goal(1)).unwrap()
    }

    #[test]
    fn recursion_depth_equals_level() {
        for level in 0..=3 {
            let s = build(level);
            assert_eq!(s.level(), level);
            assert_eq!(s.depth(), level);
            assert_eq!(s.other_goal().is_some(), level > 0);
            assert_eq!(s.lower_belief().is_some(), level > 0);
            if let Some(b) = s.lower_belief() {
                assert!(b.particles().iter().all(|q| q.state.level() == level - 1));
            }
        }
    }

    #[test]
    fn mixed_levels_are_rejected() {
        let err = normalize(vec![
            WeightedParticle::new(build(0), 1.0),
            WeightedParticle::new(build(1), 1.0),
        ])
        .unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)));
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(ws in proptest::collection::vec(0.0f64..10.0, 1..20)) {
            prop_assume!(ws.iter().sum::<f64>() > 0.0);
            let parts: Vec<_> = ws.iter().enumerate().map(|(i, &w)| p(i as u32, w)).collect();
            let once = normalize(parts).unwrap();
            let twice = normalize(once.clone().into_particles()).unwrap();
            prop_assert_eq!(&once, &twice);
            prop_assert!((once.weights().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}

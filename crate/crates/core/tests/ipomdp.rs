use std::sync::Arc;

use nested_tom_core::inference::{HypothesisSpace, Posterior};
use nested_tom_core::ipomdp::*;
use nested_tom_core::rng::rng_from;
use proptest::prelude::*;

/// Four worlds on a ring. Agent 0 moves by 0 or 1, agent 1 by 0 or 2.
/// Observations are the world, correct with probability 0.7.
struct Ring {
    table: [[f64; 4]; 3],
}

impl InteractiveEnv for Ring {
    type World = u8;
    type Obs = u8;

    fn num_actions(&self) -> usize {
        2
    }

    fn policy(&self, agent: AgentId, world: &u8, _: Option<&ParticleBelief<u8>>, goal: Goal) -> PolicyDistribution {
        if agent == 1 {
            return PolicyDistribution::uniform(2);
        }
        let p = self.table[goal.0 as usize][*world as usize];
        PolicyDistribution::from_probs(vec![p, 1.0 - p])
    }

    fn transition(&self, world: &u8, actions: [usize; 2]) -> Option<u8> {
        Some(((*world as usize + actions[0] + 2 * actions[1]) % 4) as u8)
    }

    fn observe(&self, _: AgentId, world: &u8) -> u8 {
        *world
    }

    fn observation_likelihood(&self, _: AgentId, obs: &u8, world: &u8) -> f64 {
        if obs == world {
            0.7
        } else {
            0.1
        }
    }
}

fn ring() -> Ring {
    Ring {
        table: [[0.9, 0.2, 0.5, 0.6], [0.1, 0.8, 0.3, 0.5], [0.5, 0.5, 0.95, 0.05]],
    }
}

fn obs_lik(obs: u8, world: u8) -> f64 {
    if obs == world {
        0.7
    } else {
        0.1
    }
}

#[test]
fn level1_update_is_exact_bayes() {
    let env = ring();
    let worlds = [0u8, 1, 3, 2, 0, 1];
    let goals = [0u32, 1, 2, 2, 1, 0];
    let weights = [0.1, 0.25, 0.05, 0.2, 0.3, 0.1];
    let particles = (0..6)
        .map(|i| {
            let inner = ParticleBelief::uniform(vec![InteractiveState::level0(worlds[i]), InteractiveState::level0(3)]).unwrap();
            WeightedParticle::new(InteractiveState::nested(worlds[i], inner, Goal(goals[i])).unwrap(), weights[i])
        })
        .collect();
    let belief = normalize(particles).unwrap();
    let own = 1;
    for obs in 0..4u8 {
        let updated = particle_update(&belief, &obs, own, 1, &env, &mut rng_from(5, &[obs as u64])).unwrap();
        let hand: Vec<f64> = (0..6)
            .map(|i| {
                let p0 = env.table[goals[i] as usize][worlds[i] as usize];
                let next = |a: usize| ((worlds[i] as usize + a + 2 * own) % 4) as u8;
                weights[i] * (p0 * obs_lik(obs, next(0)) + (1.0 - p0) * obs_lik(obs, next(1)))
            })
            .collect();
        let z: f64 = hand.iter().sum();
        for (p, h) in updated.particles().iter().zip(&hand) {
            assert!((p.weight - h / z).abs() < 1e-9);
            assert_eq!(p.state.level(), 1);
            assert_eq!(p.state.lower_belief().unwrap().len(), 2);
        }
    }
}

#[test]
fn level0_update_treats_the_other_agent_as_uniform() {
    let env = ring();
    let belief = ParticleBelief::uniform((0..4).map(InteractiveState::level0).collect()).unwrap();
    let updated = particle_update(&belief, &2u8, 0, 0, &env, &mut rng_from(1, &[])).unwrap();
    let hand: Vec<f64> = (0..4usize)
        .map(|w| 0.5 * obs_lik(2, (w % 4) as u8) + 0.5 * obs_lik(2, ((w + 2) % 4) as u8))
        .collect();
    let z: f64 = hand.iter().sum();
    for (p, h) in updated.particles().iter().zip(&hand) {
        assert!((p.weight - h / z).abs() < 1e-12);
    }
}

#[test]
fn mixed_levels_are_rejected() {
    let inner = ParticleBelief::uniform(vec![InteractiveState::level0(0u8)]).unwrap();
    let l1 = InteractiveState::nested(0u8, inner, Goal(0)).unwrap();
    let mixed = normalize(vec![
        WeightedParticle::new(l1, 0.5),
        WeightedParticle::new(InteractiveState::level0(1u8), 0.5),
    ]);
    assert!(mixed.is_err());
}

fn posterior(raw: &[f64]) -> Posterior {
    let space = Arc::new(HypothesisSpace::goals(1, raw.len()));
    Posterior::from_weights(space, raw.to_vec()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn kl_is_nonnegative_and_zero_on_identity(
        pair in (2usize..12).prop_flat_map(|n| (
            prop::collection::vec(0.0f64..1.0, n),
            prop::collection::vec(0.0f64..1.0, n),
        ))
    ) {
        let (a, b) = pair;
        prop_assume!(a.iter().sum::<f64>() > 1e-6 && b.iter().sum::<f64>() > 1e-6);
        let (p, q) = (posterior(&a), posterior(&b));
        let kl = kl_divergence(&p, &q).unwrap();
        prop_assert!(kl >= 0.0 && kl.is_finite());
        prop_assert!(kl_divergence_with_floor(&p, &p, 0.0).unwrap() < 1e-12);
    }
}

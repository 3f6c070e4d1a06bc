use alloc::vec::Vec;
use rand::Rng;

use super::{normalize, Goal, InteractiveState, ParticleBelief, PolicyDistribution, WeightedParticle};
use crate::{Error, Result};

/// Index of one of the two interacting agents.
pub type AgentId = usize;

/// What the recursive belief update needs from a two-agent environment.
pub trait InteractiveEnv {
    type World: Clone;
    type Obs;

    fn num_actions(&self) -> usize;

    /// Policy of `agent` in `world`, given its own belief (absent at level 0)
    /// and its goal.
    fn policy(
        &self,
        agent: AgentId,
        world: &Self::World,
        belief: Option<&ParticleBelief<Self::World>>,
        goal: Goal,
    ) -> PolicyDistribution;

    /// Joint transition. `None` marks an impossible joint action.
    fn transition(&self, world: &Self::World, actions: [usize; 2]) -> Option<Self::World>;

    fn observe(&self, agent: AgentId, world: &Self::World) -> Self::Obs;

    fn observation_likelihood(&self, agent: AgentId, obs: &Self::Obs, world: &Self::World) -> f64;
}

/// Counters for degenerate updates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct UpdateDiagnostics {
    pub all_weights_zero: u64,
}

fn joint(agent: AgentId, own: usize, other: usize) -> [usize; 2] {
    if agent == 0 {
        [own, other]
    } else {
        [other, own]
    }
}

/// Advances a belief held by `agent` after it took `own_action` and then
/// received `obs`.
///
/// Each particle's world is pushed through the dynamics with the modeled
/// agent's action marginalized under its policy at the particle's level (a
/// level-0 holder treats the other agent's action as uniform). The particle
/// weight is multiplied by `sum_a pi(a) p(obs | s'(a))`, and the particle
/// keeps one successor drawn in proportion to those terms; the nested belief
/// of the modeled agent is updated recursively with that agent's own
/// observation and action. Particle count is unchanged.
pub fn particle_update<E: InteractiveEnv, R: Rng + ?Sized>(
    belief: &ParticleBelief<E::World>,
    obs: &E::Obs,
    own_action: usize,
    agent: AgentId,
    env: &E,
    rng: &mut R,
) -> Result<ParticleBelief<E::World>> {
    let other = 1 - agent;
    let n_actions = env.num_actions();
    let mut out = Vec::with_capacity(belief.len());
    for particle in belief.particles() {
        let state = &particle.state;
        let other_policy = match state.nested_part() {
            Some(n) => env.policy(other, state.world(), Some(&n.belief), n.other_goal),
            None => PolicyDistribution::uniform(n_actions),
        };
        let mut successors = Vec::with_capacity(n_actions);
        let mut terms = Vec::with_capacity(n_actions);
        for a in 0..n_actions {
            let term = match env.transition(state.world(), joint(agent, own_action, a)) {
                Some(next) => {
                    let lik = env.observation_likelihood(agent, obs, &next);
                    successors.push(Some(next));
                    other_policy.prob(a) * lik
                }
                None => {
                    successors.push(None);
                    0.0
                }
            };
            terms.push(term);
        }
        let total: f64 = terms.iter().sum();
        let mut next_state = state.clone();
        if total > 0.0 {
            let choice = PolicyDistribution::from_probs(terms.iter().map(|t| t / total).collect())
                .sample_with(rng.gen::<f64>());
            let next_world = successors[choice].clone().expect("positive term has a successor");
            if let Some(n) = next_state.nested_mut() {
                let other_obs = env.observe(other, &next_world);
                n.belief = particle_update_or_reset(
                    &n.belief,
                    &other_obs,
                    choice,
                    other,
                    env,
                    rng,
                    &mut UpdateDiagnostics::default(),
                );
            }
            *next_state.world_mut() = next_world;
        }
        out.push(WeightedParticle::new(next_state, particle.weight * total));
    }
    normalize(out)
}

/// [`particle_update`] that recovers from impossible evidence by resetting
/// to a uniform belief over the (un-advanced) particles and counting it.
pub fn particle_update_or_reset<E: InteractiveEnv, R: Rng + ?Sized>(
    belief: &ParticleBelief<E::World>,
    obs: &E::Obs,
    own_action: usize,
    agent: AgentId,
    env: &E,
    rng: &mut R,
    diagnostics: &mut UpdateDiagnostics,
) -> ParticleBelief<E::World> {
    match particle_update(belief, obs, own_action, agent, env, rng) {
        Ok(b) => b,
        Err(Error::AllWeightsZero) => {
            diagnostics.all_weights_zero += 1;
            belief.clone().reset_uniform()
        }
        Err(e) => panic!("particle update failed: {e}"),
    }
}

/// Builds a level-1 belief with one particle per goal of the modeled agent,
/// each carrying `lower` as that agent's level-0 belief.
pub fn goal_enumeration_belief<S: Clone>(
    world: &S,
    lower: &ParticleBelief<S>,
    goals: usize,
) -> Result<ParticleBelief<S>> {
    let states = (0..goals)
        .map(|g| InteractiveState::nested(world.clone(), lower.clone(), Goal(g as u32)))
        .collect::<Result<Vec<_>>>()?;
    ParticleBelief::uniform(states)
}

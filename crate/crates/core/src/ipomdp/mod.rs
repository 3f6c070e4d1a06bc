//! Environment-agnostic interactive-state machinery: level-indexed
//! interactive states, weighted particle beliefs, Boltzmann policies, the
//! recursive particle update, KL divergence and the episode record.

mod episode;
mod policy;
mod state;
mod update;

pub use episode::{AgentRole, Episode, Step, EPISODE_SCHEMA};
pub use policy::{boltzmann_policy, PolicyDistribution, DEFAULT_BETA, DEFAULT_EPS_FLOOR};
pub use state::{normalize, Goal, InteractiveState, Nested, ParticleBelief, WeightedParticle};
pub use update::{
    goal_enumeration_belief, particle_update, particle_update_or_reset, AgentId, InteractiveEnv,
    UpdateDiagnostics,
};

use crate::inference::Posterior;
use crate::{math, Error, Result};

/// `KL(p || q)` in nats with `q` floored at `eps_floor` (and renormalized)
/// before evaluation. `0 * log(0 / q)` is taken as 0.
pub fn kl_divergence_with_floor(p: &Posterior, q: &Posterior, eps_floor: f64) -> Result<f64> {
    if p.space() != q.space() {
        return Err(Error::SpaceMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    let q = q.smoothed(eps_floor);
    let kl: f64 = p
        .probs()
        .iter()
        .zip(q.probs())
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| pi * (math::ln(pi) - math::ln(qi)))
        .sum();
    // rounding can leave tiny negative values when p == q
    Ok(kl.max(0.0))
}

/// [`kl_divergence_with_floor`] at the default floor.
pub fn kl_divergence(p: &Posterior, q: &Posterior) -> Result<f64> {
    kl_divergence_with_floor(p, q, DEFAULT_EPS_FLOOR)
}

//! Goal inference over nested hypotheses: exact enumeration and importance
//! sampling with pluggable proposals.

mod exact;
mod importance;
mod model;
mod space;

pub use exact::{exact_posterior, predict_action, Inference};
pub use importance::{compute_weight, importance_sample, ParticleTrajectory, Proposals, SamplerConfig};
pub use model::{ComputeCounter, NestedGoalModel};
pub use space::{Hypothesis, HypothesisSpace, Posterior};

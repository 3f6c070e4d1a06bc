//! Two-agent block construction on a grid: Alice (level 0) pairs two blocks,
//! Bob (level 1) helps or hinders her without knowing which pair she wants.

mod features;
mod grid;
mod model;
mod planner;
mod synth;
mod training;

use serde::{Deserialize, Serialize};

pub use features::{feature_dim, featurize, permute_blocks, permute_goal, HISTORY_K};
pub use grid::{
    AgentName, AgentRecord, AliceGoal, BlockRecord, BobGoal, ConstructionAction, Grid, GridState, Pos, ALICE, BOB,
};
pub use model::{ConstructionEnv, ConstructionModel};
pub use planner::{
    alice_policy, bfs_cost_to_go, bob_policy, successor_fields, AlicePlanner, BobPlanner, CostField, UNREACHABLE,
};
pub use training::{augment_block_permutations, feature_sequence, goal_sequences};
pub use synth::{
    episode_states, level1_beliefs, synthesize_episodes, synthesize_from_seed, ConstructionEpisode, EpisodeKind,
};

/// Scenario parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConstructionConfig {
    pub width: i32,
    pub height: i32,
    pub n_blocks: usize,
    pub t_max: usize,
    pub beta: f64,
    pub eps_floor: f64,
    /// Weight of Bob's distance to the goal blocks he believes in.
    pub approach_weight: f64,
}

impl Default for ConstructionConfig {
    fn default() -> Self {
        Self {
            width: 20,
            height: 20,
            n_blocks: 10,
            t_max: 60,
            beta: crate::ipomdp::DEFAULT_BETA,
            eps_floor: crate::ipomdp::DEFAULT_EPS_FLOOR,
            approach_weight: 1.0,
        }
    }
}

impl ConstructionConfig {
    pub fn grid(&self) -> Grid {
        Grid {
            width: self.width,
            height: self.height,
        }
    }

    pub fn alice_goals(&self) -> alloc::vec::Vec<AliceGoal> {
        AliceGoal::all(self.n_blocks)
    }
}

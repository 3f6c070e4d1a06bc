use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Schema tag written into every serialized episode.
pub const EPISODE_SCHEMA: &str = "v1";

/// Declared reasoning level and goal of one agent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentRole {
    pub id: String,
    pub level: u32,
    pub goal: u32,
}

/// One time step: the world state, the action every agent took from it, and
/// what every agent observed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step<S, A, O> {
    pub state: S,
    pub actions: Vec<A>,
    pub obs: Vec<O>,
}

/// A synthesized trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode<S, A, O> {
    pub schema: String,
    pub env: String,
    pub kind: String,
    pub seed: u64,
    pub agents: Vec<AgentRole>,
    pub steps: Vec<Step<S, A, O>>,
}

impl<S, A, O> Episode<S, A, O> {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Checks the structural invariants: at least one step, one action and
    /// one observation per agent in every step, goals below `goal_space[i]`.
    pub fn validate(&self, goal_spaces: &[usize]) -> Result<()> {
        if self.steps.is_empty() {
            return Err(Error::InvalidConfig("episode has no steps"));
        }
        let n = self.agents.len();
        if self
            .steps
            .iter()
            .any(|s| s.actions.len() != n || s.obs.len() != n)
        {
            return Err(Error::InvalidConfig("step does not cover every agent"));
        }
        for (agent, &size) in self.agents.iter().zip(goal_spaces) {
            if agent.goal as usize >= size {
                return Err(Error::InvalidConfig("agent goal outside its goal space"));
            }
        }
        Ok(())
    }
}

use alloc::vec;
use alloc::vec::Vec;

use super::grid::{AliceGoal, BobGoal, ConstructionAction, GridState, ALICE, BOB};
use super::planner::{AlicePlanner, BobPlanner};
use super::synth::{episode_states, ConstructionEpisode};
use super::ConstructionConfig;
use crate::inference::NestedGoalModel;
use crate::ipomdp::{AgentId, Goal, InteractiveEnv, ParticleBelief, PolicyDistribution};
use crate::Result;

/// A recorded Construction episode as a nested inference problem: lower
/// hypotheses are Alice's 45 goals, upper goals are Bob's help/hinder.
/// Planner tables are computed once per step.
#[derive(Debug, Clone)]
pub struct ConstructionModel {
    alice: Vec<Vec<f64>>,
    bob: Vec<BobPlanner>,
    bob_actions: Vec<usize>,
    n_goals: usize,
}

impl ConstructionModel {
    pub fn new(cfg: &ConstructionConfig, ep: &ConstructionEpisode) -> Result<Self> {
        let goals = cfg.alice_goals();
        let states = episode_states(cfg, ep)?;
        let alice = ep
            .steps
            .iter()
            .map(|step| {
                let planner = AlicePlanner::new(cfg, &step.state);
                let a = step.actions[ALICE].index();
                goals.iter().map(|&g| planner.policy(g).prob(a)).collect()
            })
            .collect();
        let has_bob = ep.agents.len() > BOB;
        let bob = if has_bob {
            states.iter().map(|s| BobPlanner::new(cfg, s, &goals)).collect()
        } else {
            Vec::new()
        };
        let bob_actions = if has_bob {
            ep.steps.iter().map(|s| s.actions[BOB].index()).collect()
        } else {
            Vec::new()
        };
        Ok(Self {
            alice,
            bob,
            bob_actions,
            n_goals: goals.len(),
        })
    }

    pub fn has_bob(&self) -> bool {
        !self.bob.is_empty()
    }
}

impl NestedGoalModel for ConstructionModel {
    fn steps(&self) -> usize {
        self.alice.len()
    }

    fn lower_size(&self) -> usize {
        self.n_goals
    }

    fn upper_size(&self) -> usize {
        BobGoal::ALL.len()
    }

    fn lower_likelihood(&self, tau: usize, h: usize) -> f64 {
        self.alice[tau][h]
    }

    fn upper_policy(&self, tau: usize, belief: &[(usize, f64)], goal: usize) -> PolicyDistribution {
        let mut dense = vec![0.0; self.n_goals];
        for &(h, w) in belief {
            dense[h] += w;
        }
        self.bob[tau].policy(&dense, BobGoal::from_index(goal))
    }

    fn upper_action(&self, tau: usize) -> usize {
        self.bob_actions[tau]
    }
}

/// The Construction world as seen by the recursive belief update: agent 0 is
/// Alice, agent 1 Bob, the observation is the full next state.
#[derive(Debug, Clone)]
pub struct ConstructionEnv {
    pub cfg: ConstructionConfig,
    goals: Vec<AliceGoal>,
}

impl ConstructionEnv {
    pub fn new(cfg: ConstructionConfig) -> Self {
        let goals = cfg.alice_goals();
        Self { cfg, goals }
    }
}

impl InteractiveEnv for ConstructionEnv {
    type World = GridState;
    type Obs = GridState;

    fn num_actions(&self) -> usize {
        ConstructionAction::ALL.len()
    }

    fn policy(
        &self,
        agent: AgentId,
        world: &GridState,
        belief: Option<&ParticleBelief<GridState>>,
        goal: Goal,
    ) -> PolicyDistribution {
        if agent == ALICE {
            return AlicePlanner::new(&self.cfg, world).policy(self.goals[goal.index()]);
        }
        let mut dense = vec![0.0; self.goals.len()];
        match belief {
            Some(b) => {
                for p in b.particles() {
                    if let Some(g) = p.state.other_goal() {
                        dense[g.index()] += p.weight;
                    }
                }
            }
            None => dense.iter_mut().for_each(|w| *w = 1.0 / self.goals.len() as f64),
        }
        BobPlanner::new(&self.cfg, world, &self.goals).policy(&dense, BobGoal::from_index(goal.index()))
    }

    fn transition(&self, world: &GridState, actions: [usize; 2]) -> Option<GridState> {
        let joint: Vec<_> = actions
            .iter()
            .take(world.agents.len())
            .map(|&a| Some(ConstructionAction::from_index(a)))
            .collect();
        self.cfg.grid().step(world, &joint).ok()
    }

    fn observe(&self, _agent: AgentId, world: &GridState) -> GridState {
        world.clone()
    }

    fn observation_likelihood(&self, _agent: AgentId, obs: &GridState, world: &GridState) -> f64 {
        if obs == world {
            1.0
        } else {
            0.0
        }
    }
}

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

use super::grid::{AgentName, AgentRecord, BlockRecord, BobGoal, ConstructionAction, GridState, Pos, ALICE};
use super::planner::{AlicePlanner, BobPlanner};
use super::ConstructionConfig;
use crate::ipomdp::{AgentRole, Episode, Step, EPISODE_SCHEMA};
use crate::rng::{derive_seed, rng_from};
use crate::{math, Result};

/// Construction episodes carry the full state; observations are empty.
pub type ConstructionEpisode = Episode<GridState, ConstructionAction, ()>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpisodeKind {
    /// Alice alone.
    S1,
    /// Alice and Bob.
    S2,
    /// Alice and Bob, separate seed stream.
    Test,
}

impl EpisodeKind {
    /// Seed of episode `k` of a set sampled from `seed`.
    pub fn episode_seed(self, seed: u64, k: usize) -> u64 {
        derive_seed(seed, &[self.stream(), k as u64])
    }

    pub fn tag(self) -> &'static str {
        match self {
            EpisodeKind::S1 => "s1",
            EpisodeKind::S2 => "s2",
            EpisodeKind::Test => "test",
        }
    }

    fn stream(self) -> u64 {
        match self {
            EpisodeKind::S1 => 1,
            EpisodeKind::S2 => 2,
            EpisodeKind::Test => 3,
        }
    }

    fn has_bob(self) -> bool {
        self != EpisodeKind::S1
    }
}

fn spawn<R: Rng>(cfg: &ConstructionConfig, n_agents: usize, rng: &mut R) -> GridState {
    let mut taken: Vec<Pos> = Vec::with_capacity(cfg.n_blocks + n_agents);
    while taken.len() < cfg.n_blocks + n_agents {
        let p = Pos::new(rng.gen_range(0..cfg.width), rng.gen_range(0..cfg.height));
        if !taken.contains(&p) {
            taken.push(p);
        }
    }
    GridState {
        agents: taken[cfg.n_blocks..]
            .iter()
            .enumerate()
            .map(|(i, p)| AgentRecord {
                id: AgentName::from_index(i),
                x: p.x,
                y: p.y,
                carrying: None,
            })
            .collect(),
        blocks: taken[..cfg.n_blocks]
            .iter()
            .enumerate()
            .map(|(id, p)| BlockRecord {
                id,
                x: p.x,
                y: p.y,
                carried_by: None,
            })
            .collect(),
    }
}

/// Exact goal posterior of an observer of Alice alone, updated one action at
/// a time in log space.
#[derive(Debug, Clone)]
struct GoalTracker {
    log_w: Vec<f64>,
}

impl GoalTracker {
    fn new(n: usize) -> Self {
        Self { log_w: vec![0.0; n] }
    }

    fn observe(&mut self, planner: &AlicePlanner, goals: &[super::AliceGoal], action: usize) {
        for (lw, &g) in self.log_w.iter_mut().zip(goals) {
            *lw += math::ln(planner.policy(g).prob(action));
        }
    }

    fn belief(&self) -> Vec<f64> {
        let lse = math::log_sum_exp(&self.log_w);
        self.log_w.iter().map(|&l| math::exp(l - lse)).collect()
    }
}

fn synthesize_one(cfg: &ConstructionConfig, kind: EpisodeKind, seed: u64) -> Result<ConstructionEpisode> {
    let mut rng = rng_from(seed, &[]);
    let grid = cfg.grid();
    let goals = cfg.alice_goals();
    let n_agents = if kind.has_bob() { 2 } else { 1 };
    let alice_goal = rng.gen_range(0..goals.len());
    let bob_goal = if kind.has_bob() { rng.gen_range(0..2) } else { 0 };
    let mut state = loop {
        let s = spawn(cfg, n_agents, &mut rng);
        if !s.goal_satisfied(goals[alice_goal]) {
            break s;
        }
    };
    let mut tracker = GoalTracker::new(goals.len());
    let mut steps = Vec::new();
    for _ in 0..cfg.t_max {
        let alice = AlicePlanner::new(cfg, &state);
        let a = alice.policy(goals[alice_goal]).sample_with(rng.gen());
        let mut actions = vec![ConstructionAction::from_index(a)];
        if kind.has_bob() {
            let bob = BobPlanner::new(cfg, &state, &goals);
            let b = bob
                .policy(&tracker.belief(), BobGoal::from_index(bob_goal))
                .sample_with(rng.gen());
            actions.push(ConstructionAction::from_index(b));
        }
        tracker.observe(&alice, &goals, a);
        let next = grid.step(&state, &actions.iter().copied().map(Some).collect::<Vec<_>>())?;
        steps.push(Step {
            state,
            actions,
            obs: vec![(); n_agents],
        });
        state = next;
        if state.goal_satisfied(goals[alice_goal]) {
            break;
        }
    }
    let mut agents = vec![AgentRole {
        id: "alice".to_string(),
        level: 0,
        goal: alice_goal as u32,
    }];
    if kind.has_bob() {
        agents.push(AgentRole {
            id: "bob".to_string(),
            level: 1,
            goal: bob_goal as u32,
        });
    }
    Ok(Episode {
        schema: EPISODE_SCHEMA.to_string(),
        env: "construction".to_string(),
        kind: kind.tag().to_string(),
        seed,
        agents,
        steps,
    })
}

/// Samples `count` episodes. Episode `k` is seeded from `(seed, kind, k)`
/// and recorded with that derived seed, so any single episode can be
/// regenerated on its own.
pub fn synthesize_episodes(
    cfg: &ConstructionConfig,
    kind: EpisodeKind,
    count: usize,
    seed: u64,
) -> Result<Vec<ConstructionEpisode>> {
    (0..count)
        .map(|k| synthesize_one(cfg, kind, kind.episode_seed(seed, k)))
        .collect()
}

/// Regenerates a single episode from its recorded seed.
pub fn synthesize_from_seed(cfg: &ConstructionConfig, kind: EpisodeKind, seed: u64) -> Result<ConstructionEpisode> {
    synthesize_one(cfg, kind, seed)
}

/// All `len + 1` states of an episode, including the one after the last
/// recorded action.
pub fn episode_states(cfg: &ConstructionConfig, ep: &ConstructionEpisode) -> Result<Vec<GridState>> {
    let grid = cfg.grid();
    let mut out: Vec<GridState> = ep.steps.iter().map(|s| s.state.clone()).collect();
    if let Some(last) = ep.steps.last() {
        let actions: Vec<_> = last.actions.iter().copied().map(Some).collect();
        out.push(grid.step(&last.state, &actions)?);
    }
    Ok(out)
}

/// Exact posterior over Alice's goals after each prefix of her actions,
/// `len + 1` entries (the first is uniform). This is the belief Bob acts on.
pub fn level1_beliefs(cfg: &ConstructionConfig, ep: &ConstructionEpisode) -> Vec<Vec<f64>> {
    let goals = cfg.alice_goals();
    let mut tracker = GoalTracker::new(goals.len());
    let mut out = vec![tracker.belief()];
    for step in &ep.steps {
        let planner = AlicePlanner::new(cfg, &step.state);
        tracker.observe(&planner, &goals, step.actions[ALICE].index());
        out.push(tracker.belief());
    }
    out
}

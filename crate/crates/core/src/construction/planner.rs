use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use super::grid::{AliceGoal, BobGoal, ConstructionAction, Grid, GridState, Pos, ALICE, BOB};
use super::ConstructionConfig;
use crate::ipomdp::{boltzmann_policy, PolicyDistribution};

/// Finite stand-in for an unreachable goal.
pub const UNREACHABLE: f64 = 1000.0;

fn cell(grid: &Grid, p: Pos) -> usize {
    (p.y * grid.width + p.x) as usize
}

fn occupancy(grid: &Grid, state: &GridState) -> Vec<Option<usize>> {
    let mut occ = vec![None; (grid.width * grid.height) as usize];
    for b in state.blocks.iter().filter(|b| b.carried_by.is_none()) {
        occ[cell(grid, b.pos())] = Some(b.id);
    }
    occ
}

/// Empty-handed travel distance from `from` to each uncarried block. Cells
/// holding a block can be entered (which picks the block up) but not passed
/// through. A block under the start cell needs a step off and back.
fn reach(grid: &Grid, occ: &[Option<usize>], n_blocks: usize, from: Pos) -> Vec<Option<u32>> {
    let mut out = vec![None; n_blocks];
    let mut dist = vec![u32::MAX; occ.len()];
    let mut queue = VecDeque::new();
    dist[cell(grid, from)] = 0;
    queue.push_back(from);
    while let Some(p) = queue.pop_front() {
        let d = dist[cell(grid, p)];
        for n in p.neighbors() {
            if !grid.in_bounds(n) || dist[cell(grid, n)] != u32::MAX {
                continue;
            }
            dist[cell(grid, n)] = d + 1;
            match occ[cell(grid, n)] {
                Some(b) => out[b] = Some(d + 1),
                None => queue.push_back(n),
            }
        }
    }
    if let Some(b) = occ[cell(grid, from)] {
        let free_neighbor = from
            .neighbors()
            .into_iter()
            .any(|n| grid.in_bounds(n) && occ[cell(grid, n)].is_none());
        out[b] = free_neighbor.then_some(2);
    }
    out
}

/// Steps to carry a block from `from` to a free cell next to `target`, plus
/// the put-down. `freed` is the carried block's old cell occupant.
fn place_cost(grid: &Grid, occ: &[Option<usize>], from: Pos, target: Pos, freed: Option<usize>) -> Option<u32> {
    target
        .neighbors()
        .into_iter()
        .filter(|&c| grid.in_bounds(c))
        .filter(|&c| occ[cell(grid, c)].is_none() || occ[cell(grid, c)] == freed)
        .map(|c| from.manhattan(c) as u32 + 1)
        .min()
}

/// Remaining-cost field of one agent in one state, shared across goals.
#[derive(Debug, Clone)]
pub struct CostField {
    grid: Grid,
    state: GridState,
    agent: usize,
    occ: Vec<Option<usize>>,
    reach: Vec<Option<u32>>,
    /// Detour for an agent holding a block outside the goal: walk to the
    /// nearest free cell, drop it, and continue from there.
    detour: Option<(u32, alloc::boxed::Box<CostField>)>,
}

impl CostField {
    pub fn new(grid: &Grid, state: &GridState, agent: usize) -> Self {
        let occ = occupancy(grid, state);
        let me = state.agents[agent];
        let reach = reach(grid, &occ, state.blocks.len(), me.pos());
        let detour = me.carrying.and_then(|k| {
            let free = (0..grid.height)
                .flat_map(|y| (0..grid.width).map(move |x| Pos::new(x, y)))
                .filter(|&c| occ[cell(grid, c)].is_none())
                .min_by_key(|&c| (me.pos().manhattan(c), c.y, c.x))?;
            let mut dropped = state.clone();
            dropped.agents[agent].x = free.x;
            dropped.agents[agent].y = free.y;
            dropped.agents[agent].carrying = None;
            dropped.blocks[k].x = free.x;
            dropped.blocks[k].y = free.y;
            dropped.blocks[k].carried_by = None;
            let d = me.pos().manhattan(free) as u32 + 1;
            Some((d, alloc::boxed::Box::new(CostField::new(grid, &dropped, agent))))
        });
        Self {
            grid: *grid,
            state: state.clone(),
            agent,
            occ,
            reach,
            detour,
        }
    }

    /// Minimal number of this agent's steps until `g` holds, with every other
    /// agent frozen; [`UNREACHABLE`] if no plan exists.
    pub fn remaining(&self, g: AliceGoal) -> f64 {
        if self.state.goal_satisfied(g) {
            return 0.0;
        }
        let me = self.state.agents[self.agent];
        let blocks = &self.state.blocks;
        let cost = match me.carrying {
            Some(k) if k == g.a || k == g.b => {
                let y = if k == g.a { g.b } else { g.a };
                place_cost(&self.grid, &self.occ, me.pos(), blocks[y].pos(), None)
            }
            Some(_) => {
                return match &self.detour {
                    Some((d, field)) => (*d as f64 + field.remaining(g)).min(UNREACHABLE),
                    None => UNREACHABLE,
                };
            }
            None => [(g.a, g.b), (g.b, g.a)]
                .into_iter()
                .filter(|&(x, _)| blocks[x].carried_by.is_none())
                .filter_map(|(x, y)| {
                    let r = self.reach[x]?;
                    let p = place_cost(&self.grid, &self.occ, blocks[x].pos(), blocks[y].pos(), Some(x))?;
                    Some(r + p)
                })
                .min(),
        };
        cost.map_or(UNREACHABLE, |c| c as f64)
    }

    /// Steps for this agent, empty-handed, to pick up the uncarried block
    /// closest to `agent`; zero while it carries a block.
    pub fn approach_block_near(&self, agent: usize) -> f64 {
        let cap = 2.0 * (self.grid.width + self.grid.height) as f64;
        if self.state.agents[self.agent].carrying.is_some() {
            return 0.0;
        }
        let target = self.state.agents[agent].pos();
        self.state
            .blocks
            .iter()
            .filter(|b| b.carried_by.is_none())
            .min_by_key(|b| (b.pos().manhattan(target), b.id))
            .and_then(|b| self.reach[b.id])
            .map_or(cap, |d| (d as f64).min(cap))
    }
}

/// Per-action cost fields of the successor states reached when only `agent`
/// acts. Illegal actions get `None`.
pub fn successor_fields(grid: &Grid, state: &GridState, agent: usize) -> Vec<Option<CostField>> {
    let legal = state.legal_actions(agent);
    ConstructionAction::ALL
        .iter()
        .map(|&a| {
            if !legal[a.index()] {
                return None;
            }
            let mut actions = vec![None; state.agents.len()];
            actions[agent] = Some(a);
            let next = grid.step(state, &actions).expect("legal action");
            Some(CostField::new(grid, &next, agent))
        })
        .collect()
}

fn costs_from_fields(state: &GridState, fields: &[Option<CostField>], g: AliceGoal) -> [f64; 5] {
    let satisfied = state.goal_satisfied(g);
    let mut out = [UNREACHABLE; 5];
    for (c, f) in out.iter_mut().zip(fields) {
        if let Some(f) = f {
            *c = if satisfied { 0.0 } else { (1.0 + f.remaining(g)).min(UNREACHABLE) };
        }
    }
    out
}

/// Per-action cost of reaching `g`: one step plus the remaining cost from the
/// successor. All legal actions cost 0 once `g` holds; illegal ones get
/// [`UNREACHABLE`].
pub fn bfs_cost_to_go(grid: &Grid, state: &GridState, agent: usize, g: AliceGoal) -> [f64; 5] {
    costs_from_fields(state, &successor_fields(grid, state, agent), g)
}

/// Alice's action model in one state, evaluated for any goal.
#[derive(Debug, Clone)]
pub struct AlicePlanner {
    state: GridState,
    fields: Vec<Option<CostField>>,
    beta: f64,
    eps_floor: f64,
}

impl AlicePlanner {
    pub fn new(cfg: &ConstructionConfig, state: &GridState) -> Self {
        Self {
            state: state.clone(),
            fields: successor_fields(&cfg.grid(), state, ALICE),
            beta: cfg.beta,
            eps_floor: cfg.eps_floor,
        }
    }

    pub fn costs(&self, g: AliceGoal) -> [f64; 5] {
        costs_from_fields(&self.state, &self.fields, g)
    }

    pub fn policy(&self, g: AliceGoal) -> PolicyDistribution {
        let values = self.costs(g).map(|c| -c);
        boltzmann_policy(&values, self.beta, self.eps_floor).restricted(&self.state.legal_actions(ALICE))
    }
}

/// Boltzmann policy over negated [`bfs_cost_to_go`], restricted to legal
/// actions.
pub fn alice_policy(cfg: &ConstructionConfig, state: &GridState, g: AliceGoal) -> PolicyDistribution {
    AlicePlanner::new(cfg, state).policy(g)
}

/// Bob's one-step lookahead tables in one state: after each Bob action,
/// Alice's remaining cost for every Alice goal, and Bob's distance to the
/// free block nearest Alice.
#[derive(Debug, Clone)]
pub struct BobPlanner {
    legal: [bool; 5],
    alice_cost: Vec<Vec<f64>>,
    approach: Vec<f64>,
    beta: f64,
    eps_floor: f64,
    approach_weight: f64,
}

impl BobPlanner {
    pub fn new(cfg: &ConstructionConfig, state: &GridState, goals: &[AliceGoal]) -> Self {
        let grid = &cfg.grid();
        let legal = state.legal_actions(BOB);
        let mut alice_cost = Vec::with_capacity(5);
        let mut approach = Vec::with_capacity(5);
        for a in ConstructionAction::ALL {
            if !legal[a.index()] {
                alice_cost.push(vec![0.0; goals.len()]);
                approach.push(0.0);
                continue;
            }
            let mut actions = vec![None; state.agents.len()];
            actions[BOB] = Some(a);
            let next = grid.step(state, &actions).expect("legal action");
            let alice = CostField::new(grid, &next, ALICE);
            let bob = CostField::new(grid, &next, BOB);
            alice_cost.push(goals.iter().map(|&g| alice.remaining(g)).collect());
            approach.push(bob.approach_block_near(ALICE));
        }
        Self {
            legal,
            alice_cost,
            approach,
            beta: cfg.beta,
            eps_floor: cfg.eps_floor,
            approach_weight: cfg.approach_weight,
        }
    }

    /// Expected utility of each action under `belief` (weights over Alice
    /// goals). Help minimizes and Hinder maximizes Alice's remaining cost;
    /// both are drawn toward the block Alice is closest to. Illegal actions
    /// are valued at `-UNREACHABLE`.
    pub fn values(&self, belief: &[f64], goal: BobGoal) -> [f64; 5] {
        let sign = match goal {
            BobGoal::Help => -1.0,
            BobGoal::Hinder => 1.0,
        };
        let mut out = [-UNREACHABLE; 5];
        for (a, v) in out.iter_mut().enumerate().filter(|(a, _)| self.legal[*a]) {
            *v = belief
                .iter()
                .enumerate()
                .filter(|(_, &w)| w > 0.0)
                .map(|(g, &w)| w * sign * self.alice_cost[a][g])
                .sum::<f64>()
                - self.approach_weight * self.approach[a];
        }
        out
    }

    pub fn policy(&self, belief: &[f64], goal: BobGoal) -> PolicyDistribution {
        boltzmann_policy(&self.values(belief, goal), self.beta, self.eps_floor).restricted(&self.legal)
    }
}

/// Bob's policy given his belief over Alice's goals (`belief[k]` is the
/// weight of `goals[k]`).
pub fn bob_policy(
    cfg: &ConstructionConfig,
    state: &GridState,
    goals: &[AliceGoal],
    belief: &[f64],
    goal: BobGoal,
) -> PolicyDistribution {
    BobPlanner::new(cfg, state, goals).policy(belief, goal)
}

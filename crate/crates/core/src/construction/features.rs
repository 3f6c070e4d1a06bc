use alloc::vec::Vec;

use super::grid::{AgentName, AliceGoal, GridState, ALICE, BOB};
use super::planner::CostField;
use super::synth::ConstructionEpisode;
use super::ConstructionConfig;
use crate::neural::FeatureVector;

/// Number of past actions encoded per agent.
pub const HISTORY_K: usize = 4;

/// Length of [`featurize`] output:
/// `6 + n_blocks * 12 + 2 * n_goals + 2 * HISTORY_K * 5 + 1`.
///
/// Layout, in order: agent positions (Alice x, y, Bob x, y) and carrying
/// flags; per block its position and carried-by-Alice / carried-by-Bob
/// flags; per block its offset and Manhattan distance from Alice, then from
/// Bob; per block how much Alice, then Bob, closed in on it over the last
/// `HISTORY_K` steps; per Alice goal her remaining cost and how much it
/// dropped over the last `HISTORY_K` steps; the last `HISTORY_K` actions of each agent one-hot,
/// most recent first; and `t / t_max`. Bob's slots are zero when he is
/// absent, and missing history is zero-padded. Coordinates are absolute, so
/// the encoding is not translation invariant.
///
/// At target level 1 (reasoning about Alice alone) every Bob slot is zeroed,
/// so a model trained on Alice-only episodes sees the same inputs when Bob
/// is present.
pub fn feature_dim(cfg: &ConstructionConfig) -> usize {
    let n_goals = cfg.n_blocks * (cfg.n_blocks - 1) / 2;
    6 + cfg.n_blocks * 12 + 2 * n_goals + 2 * HISTORY_K * 5 + 1
}

fn dist_to(state: &GridState, agent: usize, block: usize) -> f64 {
    state.agents[agent].pos().manhattan(state.blocks[block].pos()) as f64
}

/// Encodes the episode prefix made of its first `n` actions, observed from
/// the state `states[n]` (see [`super::episode_states`]).
pub fn featurize(
    cfg: &ConstructionConfig,
    ep: &ConstructionEpisode,
    states: &[GridState],
    n: usize,
    target_level: usize,
) -> FeatureVector {
    let w = (cfg.width - 1).max(1) as f64;
    let h = (cfg.height - 1).max(1) as f64;
    let span = (cfg.width + cfg.height) as f64;
    let s = &states[n];
    let has_bob = s.agents.len() > BOB && target_level >= 2;
    let agents: &[usize] = if has_bob { &[ALICE, BOB] } else { &[ALICE] };
    let mut v = Vec::with_capacity(feature_dim(cfg));

    for i in [ALICE, BOB] {
        if agents.contains(&i) {
            let a = s.agents[i];
            v.extend([a.x as f64 / w, a.y as f64 / h]);
        } else {
            v.extend([0.0, 0.0]);
        }
    }
    for i in [ALICE, BOB] {
        v.push(if agents.contains(&i) { s.agents[i].carrying.is_some() as u8 as f64 } else { 0.0 });
    }
    for b in &s.blocks {
        v.extend([
            b.x as f64 / w,
            b.y as f64 / h,
            (b.carried_by == Some(AgentName::Alice)) as u8 as f64,
            (has_bob && b.carried_by == Some(AgentName::Bob)) as u8 as f64,
        ]);
    }
    for i in [ALICE, BOB] {
        for b in &s.blocks {
            if agents.contains(&i) {
                let a = s.agents[i];
                v.extend([
                    (b.x - a.x) as f64 / w,
                    (b.y - a.y) as f64 / h,
                    a.pos().manhattan(b.pos()) as f64 / span,
                ]);
            } else {
                v.extend([0.0; 3]);
            }
        }
    }
    let back = n.min(HISTORY_K);
    for i in [ALICE, BOB] {
        for k in 0..s.blocks.len() {
            if agents.contains(&i) && back > 0 {
                let closed = dist_to(&states[n - back], i, k) - dist_to(s, i, k);
                v.push(closed / HISTORY_K as f64);
            } else {
                v.push(0.0);
            }
        }
    }
    let grid = cfg.grid();
    let now = CostField::new(&grid, s, ALICE);
    let before = CostField::new(&grid, &states[n - back], ALICE);
    let cost = |f: &CostField, g| f.remaining(g).min(span);
    for g in cfg.alice_goals() {
        v.push(cost(&now, g) / span);
    }
    for g in cfg.alice_goals() {
        let dropped = if back > 0 { cost(&before, g) - cost(&now, g) } else { 0.0 };
        v.push(dropped / HISTORY_K as f64);
    }
    for i in [ALICE, BOB] {
        for k in 1..=HISTORY_K {
            let mut onehot = [0.0; 5];
            if k <= n && agents.contains(&i) {
                if let Some(a) = ep.steps[n - k].actions.get(i) {
                    onehot[a.index()] = 1.0;
                }
            }
            v.extend(onehot);
        }
    }
    v.push(n as f64 / cfg.t_max as f64);
    debug_assert_eq!(v.len(), feature_dim(cfg));
    FeatureVector(v)
}

/// Relabels blocks in an encoded feature vector: block `i` becomes block
/// `perm[i]`, and per-goal entries move with their block pairs. Dynamics do
/// not depend on block ids, so the result encodes an equally likely episode.
pub fn permute_blocks(cfg: &ConstructionConfig, f: &FeatureVector, perm: &[usize]) -> FeatureVector {
    let nb = cfg.n_blocks;
    let goals = cfg.alice_goals();
    let mut out = f.0.clone();
    let mut move_block = |offset: usize, width: usize| {
        for (i, &p) in perm.iter().enumerate() {
            let (src, dst) = (offset + i * width, offset + p * width);
            out[dst..dst + width].copy_from_slice(&f.0[src..src + width]);
        }
    };
    move_block(6, 4);
    move_block(6 + 4 * nb, 3);
    move_block(6 + 7 * nb, 3);
    move_block(6 + 10 * nb, 1);
    move_block(6 + 11 * nb, 1);
    let goal_base = 6 + 12 * nb;
    for (k, g) in goals.iter().enumerate() {
        let j = AliceGoal::id(perm[g.a], perm[g.b], nb);
        out[goal_base + j] = f.0[goal_base + k];
        out[goal_base + goals.len() + j] = f.0[goal_base + goals.len() + k];
    }
    FeatureVector(out)
}

/// Goal id after relabeling blocks by `perm`.
pub fn permute_goal(cfg: &ConstructionConfig, goal: usize, perm: &[usize]) -> usize {
    let g = cfg.alice_goals()[goal];
    AliceGoal::id(perm[g.a], perm[g.b], cfg.n_blocks)
}

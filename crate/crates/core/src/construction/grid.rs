use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const ALICE: usize = 0;
pub const BOB: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pos {
    pub x: i32,
    pub y: i32,
}

impl Pos {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn manhattan(self, other: Pos) -> i32 {
        (self.x - other.x).abs() + (self.y - other.y).abs()
    }

    pub fn neighbors(self) -> [Pos; 4] {
        [
            Pos::new(self.x, self.y - 1),
            Pos::new(self.x, self.y + 1),
            Pos::new(self.x - 1, self.y),
            Pos::new(self.x + 1, self.y),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConstructionAction {
    #[serde(rename = "U")]
    Up,
    #[serde(rename = "D")]
    Down,
    #[serde(rename = "L")]
    Left,
    #[serde(rename = "R")]
    Right,
    #[serde(rename = "P")]
    PutDown,
}

impl ConstructionAction {
    pub const ALL: [ConstructionAction; 5] = [
        ConstructionAction::Up,
        ConstructionAction::Down,
        ConstructionAction::Left,
        ConstructionAction::Right,
        ConstructionAction::PutDown,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i]
    }

    /// Displacement of a move; `Up` decreases `y`.
    pub fn delta(self) -> Option<(i32, i32)> {
        match self {
            ConstructionAction::Up => Some((0, -1)),
            ConstructionAction::Down => Some((0, 1)),
            ConstructionAction::Left => Some((-1, 0)),
            ConstructionAction::Right => Some((1, 0)),
            ConstructionAction::PutDown => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ConstructionAction::Up => "U",
            ConstructionAction::Down => "D",
            ConstructionAction::Left => "L",
            ConstructionAction::Right => "R",
            ConstructionAction::PutDown => "P",
        }
    }
}

/// Alice's goal: put blocks `a < b` next to each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AliceGoal {
    pub a: usize,
    pub b: usize,
}

impl AliceGoal {
    /// Position of `{a, b}` in [`AliceGoal::all`].
    pub fn id(a: usize, b: usize, n_blocks: usize) -> usize {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        a * (2 * n_blocks - a - 1) / 2 + (b - a - 1)
    }

    /// All unordered pairs of `n_blocks` blocks in lexicographic order; the
    /// position in this list is the goal id.
    pub fn all(n_blocks: usize) -> Vec<AliceGoal> {
        let mut v = Vec::with_capacity(n_blocks * (n_blocks - 1) / 2);
        for a in 0..n_blocks {
            for b in a + 1..n_blocks {
                v.push(AliceGoal { a, b });
            }
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BobGoal {
    Help = 0,
    Hinder = 1,
}

impl BobGoal {
    pub const ALL: [BobGoal; 2] = [BobGoal::Help, BobGoal::Hinder];

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentName {
    Alice,
    Bob,
}

impl AgentName {
    pub fn index(self) -> usize {
        match self {
            AgentName::Alice => ALICE,
            AgentName::Bob => BOB,
        }
    }

    pub fn from_index(i: usize) -> Self {
        if i == ALICE {
            AgentName::Alice
        } else {
            AgentName::Bob
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AgentRecord {
    pub id: AgentName,
    pub x: i32,
    pub y: i32,
    /// Id of the carried block.
    pub carrying: Option<usize>,
}

impl AgentRecord {
    pub fn pos(&self) -> Pos {
        Pos::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlockRecord {
    pub id: usize,
    pub x: i32,
    pub y: i32,
    pub carried_by: Option<AgentName>,
}

impl BlockRecord {
    pub fn pos(&self) -> Pos {
        Pos::new(self.x, self.y)
    }
}

/// Fully observed Construction state. Carried blocks sit at their carrier's
/// cell. Agents are stored Alice first; S1 states have no Bob.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridState {
    pub agents: Vec<AgentRecord>,
    pub blocks: Vec<BlockRecord>,
}

impl GridState {
    pub fn agent(&self, i: usize) -> &AgentRecord {
        &self.agents[i]
    }

    /// Uncarried block lying on `p`, if any.
    pub fn free_block_at(&self, p: Pos) -> Option<usize> {
        self.blocks
            .iter()
            .find(|b| b.carried_by.is_none() && b.pos() == p)
            .map(|b| b.id)
    }

    pub fn carried_by(&self, block: usize) -> Option<usize> {
        self.blocks[block].carried_by.map(AgentName::index)
    }

    /// Goal predicate: both blocks uncarried and 4-adjacent.
    pub fn goal_satisfied(&self, g: AliceGoal) -> bool {
        let (a, b) = (&self.blocks[g.a], &self.blocks[g.b]);
        a.carried_by.is_none() && b.carried_by.is_none() && a.pos().manhattan(b.pos()) == 1
    }

    /// Legality mask over [`ConstructionAction::ALL`] for agent `i`.
    pub fn legal_actions(&self, i: usize) -> [bool; 5] {
        let carrying = self.agents[i].carrying.is_some();
        [true, true, true, true, carrying]
    }
}

/// Grid dimensions and dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    pub width: i32,
    pub height: i32,
}

impl Grid {
    pub fn in_bounds(&self, p: Pos) -> bool {
        p.x >= 0 && p.y >= 0 && p.x < self.width && p.y < self.height
    }

    /// Simultaneous step. `None` entries leave that agent idle (used by
    /// planners for single-agent lookahead). Put-downs resolve first, then
    /// moves; an agent entering a cell with an uncarried block while
    /// empty-handed picks it up (Alice resolves before Bob). Out-of-bounds
    /// moves and put-downs onto an occupied cell are no-ops.
    pub fn step(&self, state: &GridState, actions: &[Option<ConstructionAction>]) -> Result<GridState> {
        let mut next = state.clone();
        for (i, a) in actions.iter().enumerate() {
            if *a == Some(ConstructionAction::PutDown) && state.agents[i].carrying.is_none() {
                return Err(Error::IllegalAction("put down while empty-handed"));
            }
        }
        for (i, a) in actions.iter().enumerate() {
            if *a != Some(ConstructionAction::PutDown) {
                continue;
            }
            let agent = next.agents[i];
            if next.free_block_at(agent.pos()).is_some() {
                continue;
            }
            let block = agent.carrying.expect("checked above");
            next.blocks[block].carried_by = None;
            next.agents[i].carrying = None;
        }
        let mut moved = [false; 2];
        for (i, a) in actions.iter().enumerate() {
            let Some((dx, dy)) = a.and_then(ConstructionAction::delta) else {
                continue;
            };
            let agent = &mut next.agents[i];
            let target = Pos::new(agent.x + dx, agent.y + dy);
            if !self.in_bounds(target) {
                continue;
            }
            agent.x = target.x;
            agent.y = target.y;
            moved[i] = true;
            if let Some(b) = agent.carrying {
                next.blocks[b].x = target.x;
                next.blocks[b].y = target.y;
            }
        }
        for i in 0..next.agents.len() {
            if !moved[i] || next.agents[i].carrying.is_some() {
                continue;
            }
            if let Some(b) = next.free_block_at(next.agents[i].pos()) {
                next.blocks[b].carried_by = Some(next.agents[i].id);
                next.agents[i].carrying = Some(b);
            }
        }
        Ok(next)
    }
}

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::features::driver_features;
use super::layout::{Arm, Layout};
use super::planner::PlanContext;
use super::tracker::{StateBelief, TrackerMode, LANE_CLASSES};
use super::world::{Car, CarObs, CarState, DrivingAction, DrivingGoal, DrivingObservation, DrivingWorld};
use crate::ipomdp::{AgentRole, Episode, PolicyDistribution, Step, EPISODE_SCHEMA};
use crate::neural::{propose_probs, MlpParams};
use crate::rng::{derive_seed, rng_from};
use crate::{math, Error, Result};

/// What one driver perceived at one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriverRecord {
    pub visible: Vec<u32>,
    pub honks: Vec<u32>,
    /// Believed probability that each incoming lane holds a car.
    pub existence: [f64; 4],
    pub tracker: String,
}

pub type DrivingEpisode = Episode<DrivingWorld, DrivingAction, DriverRecord>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrivingKind {
    /// Level-0 drivers with exact state tracking.
    S0,
    /// Level-0 drivers with amortized state tracking.
    S1,
    /// Level-1 drivers with amortized state tracking.
    S2,
    /// Level-1 drivers with exact state tracking.
    Test,
    /// As `Test` with four cars.
    Gen4Car,
    /// As `Test` with one inattentive driver.
    GenInattentive,
}

impl DrivingKind {
    /// Seed of episode `k` of a set sampled from `seed`.
    pub fn episode_seed(self, seed: u64, k: usize) -> u64 {
        derive_seed(seed, &[self.stream(), k as u64])
    }

    pub const ALL: [DrivingKind; 6] = [
        DrivingKind::S0,
        DrivingKind::S1,
        DrivingKind::S2,
        DrivingKind::Test,
        DrivingKind::Gen4Car,
        DrivingKind::GenInattentive,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            DrivingKind::S0 => "s0",
            DrivingKind::S1 => "s1",
            DrivingKind::S2 => "s2",
            DrivingKind::Test => "test",
            DrivingKind::Gen4Car => "gen4",
            DrivingKind::GenInattentive => "inattentive",
        }
    }

    fn stream(self) -> u64 {
        10 + self as u64
    }

    pub fn n_cars(self) -> usize {
        if self == DrivingKind::Gen4Car {
            4
        } else {
            3
        }
    }

    pub fn level(self) -> u8 {
        match self {
            DrivingKind::S0 | DrivingKind::S1 => 0,
            _ => 1,
        }
    }

    /// Whether drivers track state with the learned proposal.
    pub fn amortized(self) -> bool {
        matches!(self, DrivingKind::S1 | DrivingKind::S2)
    }
}

/// Ids of cars that honked within the last `window` steps before `t`.
pub fn recent_honkers(actions: &[Vec<DrivingAction>], t: usize, window: u32) -> Vec<u32> {
    let mut out = Vec::new();
    for s in t.saturating_sub(window as usize)..t.min(actions.len()) {
        for (i, a) in actions[s].iter().enumerate() {
            if *a == DrivingAction::Honk && !out.contains(&(i as u32)) {
                out.push(i as u32);
            }
        }
    }
    out.sort_unstable();
    out
}

/// Level-0 probability of each perceived car's action under each of its
/// goals, judged from `me`'s view of the scene (no hypothetical cars).
pub fn view_likelihoods(
    layout: &Layout,
    me: &CarObs,
    tracks: &[CarObs],
    honkers: &[u32],
    actions: &[DrivingAction],
) -> Vec<(u32, [f64; 3])> {
    tracks
        .iter()
        .map(|c| {
            let others: Vec<CarObs> = tracks
                .iter()
                .filter(|o| o.id != c.id)
                .copied()
                .chain(core::iter::once(*me))
                .collect();
            let ctx = PlanContext::new(layout, c, &others, &[], honkers);
            let a = actions[c.id as usize].index();
            (c.id, core::array::from_fn(|g| ctx.policy_level0(DrivingGoal::from_index(g)).prob(a)))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
struct View {
    me: CarObs,
    tracks: Vec<CarObs>,
    honkers: Vec<u32>,
}

/// One driver's reasoning state: a level-0 state belief and, from level 1
/// up, a goal belief about every other car.
#[derive(Debug, Clone, PartialEq)]
pub struct Driver {
    pub index: usize,
    pub level: u8,
    pub goal: DrivingGoal,
    pub belief: StateBelief,
    goal_logw: Vec<[f64; 3]>,
    view: Option<View>,
    obs: Vec<DrivingObservation>,
    actions: Vec<DrivingAction>,
}

impl Driver {
    pub fn new(layout: &Layout, world: &DrivingWorld, index: usize, level: u8) -> Self {
        let car = &world.cars[index];
        Self {
            index,
            level,
            goal: car.state.goal,
            belief: StateBelief::prior(layout, car),
            goal_logw: vec![[0.0; 3]; world.cars.len()],
            view: None,
            obs: Vec::new(),
            actions: Vec::new(),
        }
    }

    /// Absorbs the state at the current step. `prev_actions` are the joint
    /// actions that led here; `state_model` switches to amortized tracking
    /// with that many draws per lane.
    pub fn observe<R: Rng + ?Sized>(
        &mut self,
        layout: &Layout,
        world: &DrivingWorld,
        prev_actions: Option<&[DrivingAction]>,
        honkers: &[u32],
        state_model: Option<(&MlpParams, usize)>,
        rng: &mut R,
    ) -> Result<DrivingObservation> {
        if self.level > 0 {
            if let (Some(v), Some(acts)) = (&self.view, prev_actions) {
                for (id, lik) in view_likelihoods(layout, &v.me, &v.tracks, &v.honkers, acts) {
                    for (lw, l) in self.goal_logw[id as usize].iter_mut().zip(lik) {
                        *lw += math::ln(l);
                    }
                }
            }
        }
        let obs = world.observe(layout, self.index);
        self.obs.push(obs.clone());
        match state_model {
            Some((params, n)) => {
                let arm = world.cars[self.index].arm;
                let x = driver_features(layout, arm, &self.obs, &self.actions);
                let flat = propose_probs(params, &x, &[], layout.cfg.eps_floor)?;
                if flat.len() != 4 * LANE_CLASSES {
                    return Err(Error::DimMismatch {
                        expected: 4 * LANE_CLASSES,
                        found: flat.len(),
                    });
                }
                let q: [[f64; LANE_CLASSES]; 4] =
                    core::array::from_fn(|a| core::array::from_fn(|c| flat[a * LANE_CLASSES + c]));
                self.belief
                    .update(layout, &obs, TrackerMode::Amortized { proposals: &q, n }, rng);
            }
            None => self.belief.update(layout, &obs, TrackerMode::Exact, rng),
        }
        self.view = Some(View {
            me: world.cars[self.index].public(),
            tracks: self.belief.tracks.clone(),
            honkers: honkers.to_vec(),
        });
        Ok(obs)
    }

    pub fn record_action(&mut self, a: DrivingAction) {
        self.actions.push(a);
    }

    /// Current goal belief about car `id`.
    pub fn goal_marginal(&self, id: u32) -> [f64; 3] {
        let lw = &self.goal_logw[id as usize];
        let lse = math::log_sum_exp(lw);
        lw.map(|l| math::exp(l - lse))
    }

    /// Perceived cars at the current step, with the honkers that applied.
    pub fn view(&self) -> Option<(&CarObs, &[CarObs], &[u32])> {
        self.view.as_ref().map(|v| (&v.me, v.tracks.as_slice(), v.honkers.as_slice()))
    }

    pub fn context(&self, layout: &Layout, honkers: &[u32]) -> PlanContext {
        PlanContext::from_belief(layout, &self.belief, honkers)
    }

    pub fn policy(&self, layout: &Layout, honkers: &[u32]) -> PolicyDistribution {
        let ctx = self.context(layout, honkers);
        if self.level == 0 {
            ctx.policy_level0(self.goal)
        } else {
            let m: Vec<[f64; 3]> = ctx.tracked.iter().map(|&id| self.goal_marginal(id)).collect();
            ctx.policy(self.goal, &m, self.level)
        }
    }
}

fn spawn<R: Rng>(layout: &Layout, kind: DrivingKind, rng: &mut R) -> DrivingWorld {
    let cfg = &layout.cfg;
    let mut arms = Arm::ALL;
    arms.shuffle(rng);
    let n = kind.n_cars();
    let sleepy = (kind == DrivingKind::GenInattentive).then(|| rng.gen_range(0..n));
    let cars = arms[..n]
        .iter()
        .enumerate()
        .map(|(i, &arm)| {
            let goal = DrivingGoal::from_index(rng.gen_range(0..3));
            let d = rng.gen_range(cfg.spawn_distance.0..cfg.spawn_distance.1);
            let v = rng.gen_range(cfg.spawn_speed.0..cfg.spawn_speed.1);
            let p = layout.incoming_point(arm, d);
            Car {
                id: i as u32,
                arm,
                state: CarState {
                    x: p.x,
                    y: p.y,
                    heading: arm.incoming_heading(),
                    v,
                    goal,
                    attentive: sleepy != Some(i),
                },
                honked: false,
                attention: 0,
            }
        })
        .collect();
    DrivingWorld::new(cars, layout)
}

fn record(d: &Driver, obs: &DrivingObservation, amortized: bool) -> DriverRecord {
    DriverRecord {
        visible: obs.visible.iter().map(|c| c.id).collect(),
        honks: obs.honks_heard.iter().map(|c| c.id).collect(),
        existence: d.belief.existence(),
        tracker: if amortized { "amortized" } else { "exact" }.to_string(),
    }
}

fn roles(world: &DrivingWorld, levels: &[u8]) -> Vec<AgentRole> {
    world
        .cars
        .iter()
        .zip(levels)
        .map(|(c, &l)| AgentRole {
            id: format!("car{}", c.id),
            level: u32::from(l),
            goal: c.state.goal.index() as u32,
        })
        .collect()
}

fn synthesize_one(layout: &Layout, kind: DrivingKind, seed: u64, state_model: Option<&MlpParams>) -> Result<DrivingEpisode> {
    synthesize_at(layout, kind, kind.level(), seed, state_model)
}

fn synthesize_at(
    layout: &Layout,
    kind: DrivingKind,
    level: u8,
    seed: u64,
    state_model: Option<&MlpParams>,
) -> Result<DrivingEpisode> {
    let model = if kind.amortized() {
        Some((
            state_model.ok_or(Error::MissingModel("level-0 state proposal"))?,
            layout.cfg.state_particles,
        ))
    } else {
        None
    };
    let mut rng = rng_from(seed, &[]);
    let mut world = spawn(layout, kind, &mut rng);
    let n = world.cars.len();
    let mut drivers: Vec<Driver> = (0..n).map(|i| Driver::new(layout, &world, i, level)).collect();
    let mut history: Vec<Vec<DrivingAction>> = Vec::new();
    let mut steps = Vec::new();
    for t in 0..layout.cfg.t_max {
        let honkers = recent_honkers(&history, t, layout.cfg.honk_attention_steps);
        let mut obs = Vec::with_capacity(n);
        let mut actions = Vec::with_capacity(n);
        for d in &mut drivers {
            let o = d.observe(layout, &world, history.last().map(|a| a.as_slice()), &honkers, model, &mut rng)?;
            obs.push(record(d, &o, model.is_some()));
        }
        for d in &mut drivers {
            let a = DrivingAction::from_index(d.policy(layout, &honkers).sample_with(rng.gen()));
            d.record_action(a);
            actions.push(a);
        }
        let next = world.step(layout, &actions);
        steps.push(Step {
            state: world,
            actions: actions.clone(),
            obs,
        });
        history.push(actions);
        world = next;
        if layout.cfg.end_when_cleared && world.cars.iter().all(|c| layout.cleared(c.arm, c.state.goal, c.pos())) {
            break;
        }
    }
    let levels = vec![level; n];
    Ok(Episode {
        schema: EPISODE_SCHEMA.to_string(),
        env: "driving".to_string(),
        kind: kind.tag().to_string(),
        seed,
        agents: roles(&steps[0].state, &levels),
        steps,
    })
}

/// Samples `count` episodes; episode `k` is seeded from `(seed, kind, k)`.
/// Kinds with amortized tracking need `state_model`.
pub fn synthesize_driving(
    layout: &Layout,
    kind: DrivingKind,
    count: usize,
    seed: u64,
    state_model: Option<&MlpParams>,
) -> Result<Vec<DrivingEpisode>> {
    (0..count)
        .map(|k| synthesize_one(layout, kind, kind.episode_seed(seed, k), state_model))
        .collect()
}

/// Same spawns and seeds as [`synthesize_driving`], with every driver
/// forced to `level`. Used to ablate nested reasoning.
pub fn synthesize_driving_at_level(
    layout: &Layout,
    kind: DrivingKind,
    level: u8,
    count: usize,
    seed: u64,
    state_model: Option<&MlpParams>,
) -> Result<Vec<DrivingEpisode>> {
    (0..count)
        .map(|k| synthesize_at(layout, kind, level, kind.episode_seed(seed, k), state_model))
        .collect()
}

/// Regenerates a single episode from its recorded seed.
pub fn synthesize_driving_from_seed(
    layout: &Layout,
    kind: DrivingKind,
    seed: u64,
    state_model: Option<&MlpParams>,
) -> Result<DrivingEpisode> {
    synthesize_one(layout, kind, seed, state_model)
}

/// Records a hand-written episode: fixed initial world and actions, with
/// every driver tracking state exactly.
pub fn scripted_episode(layout: &Layout, start: DrivingWorld, levels: &[u8], actions: &[Vec<DrivingAction>]) -> Result<DrivingEpisode> {
    let n = start.cars.len();
    if levels.len() != n || actions.iter().any(|a| a.len() != n) {
        return Err(Error::InvalidConfig("one level and one action per car required"));
    }
    let mut rng = rng_from(0, &[]);
    let mut drivers: Vec<Driver> = (0..n).map(|i| Driver::new(layout, &start, i, levels[i])).collect();
    let mut world = start;
    let mut steps = Vec::new();
    for (t, acts) in actions.iter().enumerate() {
        let honkers = recent_honkers(actions, t, layout.cfg.honk_attention_steps);
        let prev = t.checked_sub(1).map(|p| actions[p].as_slice());
        let mut obs = Vec::with_capacity(n);
        for (d, &a) in drivers.iter_mut().zip(acts) {
            let o = d.observe(layout, &world, prev, &honkers, None, &mut rng)?;
            obs.push(record(d, &o, false));
            d.record_action(a);
        }
        let next = world.step(layout, acts);
        steps.push(Step {
            state: world,
            actions: acts.clone(),
            obs,
        });
        world = next;
    }
    let agents = roles(&steps.first().ok_or(Error::InvalidConfig("episode has no steps"))?.state, levels);
    Ok(Episode {
        schema: EPISODE_SCHEMA.to_string(),
        env: "driving".to_string(),
        kind: "scripted".to_string(),
        seed: 0,
        agents,
        steps,
    })
}

/// All `len + 1` worlds of an episode.
pub fn episode_worlds(layout: &Layout, ep: &DrivingEpisode) -> Vec<DrivingWorld> {
    let mut out: Vec<DrivingWorld> = ep.steps.iter().map(|s| s.state.clone()).collect();
    if let Some(last) = ep.steps.last() {
        out.push(last.state.step(layout, &last.actions));
    }
    out
}

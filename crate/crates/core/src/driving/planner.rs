use alloc::vec::Vec;

use super::layout::{Arm, Layout, Path, V2};
use super::tracker::StateBelief;
use super::world::{kinematics_step, CarObs, CarState, DrivingAction, DrivingGoal};
use crate::ipomdp::{boltzmann_policy, PolicyDistribution};
use crate::math;

/// High-level options a driver chooses between.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Follow the route at the target speed.
    Move,
    Stop,
    /// Honk to alert a driver who is heading into a conflict unaware.
    Signal,
}

/// One step of deterministic route following from path index `idx`.
pub fn move_action(layout: &Layout, path: &Path, state: &CarState, idx: usize) -> DrivingAction {
    let cfg = &layout.cfg;
    let s = path.s_at(idx);
    let slow = path.turning && s > path.entry_s - cfg.turn_slowdown && s < path.exit_s;
    let vt = if slow { cfg.v_turn } else { cfg.v_max };
    if state.v > vt + 1e-9 {
        return DrivingAction::Brake;
    }
    let target = path.ahead(idx, cfg.lookahead);
    let err = math::wrap_angle((target - state.pos()).heading() - state.heading);
    let rotate = if err > 0.0 {
        DrivingAction::RotateLeft
    } else {
        DrivingAction::RotateRight
    };
    if err.abs() > cfg.turn_rate * cfg.dt / 2.0 {
        rotate
    } else if state.v + 1e-9 < vt || vt >= cfg.v_max {
        DrivingAction::Accelerate
    } else {
        // At the turn speed cap: a rotation is the only way to coast.
        rotate
    }
}

fn as_state(c: &CarObs) -> CarState {
    CarState {
        x: c.x,
        y: c.y,
        heading: c.heading,
        v: c.v,
        goal: DrivingGoal::Forward,
        attentive: true,
    }
}

/// A predicted route: first Move action, remaining distance to the
/// intersection (negative once inside) and positions over the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    pub first: DrivingAction,
    pub d_rem: f64,
    pub points: Vec<V2>,
    pub headings: Vec<f64>,
    /// Where the car would be after braking for the whole horizon.
    halt: V2,
}

fn halt_point(layout: &Layout, start: &CarState, steps: usize) -> V2 {
    let mut s = *start;
    for _ in 0..steps {
        if s.v <= 0.0 {
            break;
        }
        s = kinematics_step(&layout.cfg, &s, DrivingAction::Brake);
    }
    s.pos()
}

/// Rolls the Move mode forward for `steps` steps.
pub fn rollout(layout: &Layout, arm: Arm, goal: DrivingGoal, start: &CarState, steps: usize) -> Rollout {
    let path = layout.path(arm, goal);
    let mut idx = path.project(start.pos(), None);
    let d_rem = path.entry_s - path.s_at(idx);
    let mut s = *start;
    let mut first = None;
    let mut points = Vec::with_capacity(steps);
    let mut headings = Vec::with_capacity(steps);
    for _ in 0..steps {
        let a = move_action(layout, path, &s, idx);
        first.get_or_insert(a);
        s = kinematics_step(&layout.cfg, &s, a);
        idx = path.project(s.pos(), Some(idx));
        points.push(s.pos());
        headings.push(s.heading);
    }
    Rollout {
        first: first.unwrap_or(DrivingAction::Accelerate),
        d_rem,
        points,
        headings,
        halt: halt_point(layout, start, steps),
    }
}

/// Steps of timing error tolerated when matching two rollouts.
const TIME_SLACK: usize = 1;

/// First step at which the two rollouts come closer than two radii plus
/// the safety margin, give or take `TIME_SLACK` steps.
fn first_conflict(layout: &Layout, a: &Rollout, b: &Rollout) -> Option<usize> {
    let r = 2.0 * layout.cfg.car_radius + layout.cfg.safety_margin;
    (0..a.points.len()).find(|&i| {
        let lo = i.saturating_sub(TIME_SLACK);
        let hi = (i + TIME_SLACK + 1).min(b.points.len());
        b.points[lo..hi].iter().any(|q| a.points[i].dist(*q) < r)
    })
}

/// Whether `b` has the right of way over `a`: at the first conflict `b` is
/// in front of `a` and not the other way round; otherwise whoever is
/// closer to (or further into) the intersection, ties to the lower id.
fn goes_first(b: &Rollout, b_id: Option<u32>, a: &Rollout, a_id: Option<u32>, k: usize) -> bool {
    let (pa, pb) = (a.points[k], b.points[k]);
    let b_in_front = (pb - pa).dot(V2::from_heading(a.headings[k])) > 0.0;
    let a_in_front = (pa - pb).dot(V2::from_heading(b.headings[k])) > 0.0;
    if b_in_front != a_in_front {
        return b_in_front;
    }
    ahead_of(b.d_rem, b_id, a.d_rem, a_id)
}

/// Whether `b` would come to a halt in the path of `a`.
fn blocks(layout: &Layout, a: &Rollout, b: &Rollout) -> bool {
    let r = 2.0 * layout.cfg.car_radius + layout.cfg.safety_margin;
    a.points.iter().any(|p| p.dist(b.halt) < r)
}

/// `(conflict, other goes first)` for a pair of rollouts. A car that would
/// come to a halt in my path is an obstacle and always goes first.
fn pair_facts(layout: &Layout, me: &Rollout, me_id: Option<u32>, other: &Rollout, other_id: Option<u32>) -> (bool, bool) {
    if blocks(layout, me, other) {
        return (true, true);
    }
    match first_conflict(layout, me, other) {
        Some(k) => (true, goes_first(other, other_id, me, me_id, k)),
        None => (false, false),
    }
}

fn three<T>(f: impl FnMut(usize) -> T) -> [T; 3] {
    core::array::from_fn(f)
}

/// Pairwise facts about the driver and one other car, indexed
/// `[own goal][other goal]`.
#[derive(Debug, Clone, PartialEq)]
struct OtherFacts {
    conflict: [[bool; 3]; 3],
    /// The other car reaches the intersection first.
    ahead: [[bool; 3]; 3],
    /// Per own goal: the other car would halt in the driver's path.
    blocking: [bool; 3],
    /// The other car can see the driver.
    sees_me: bool,
    /// It sees the driver or heard it honk.
    aware_of_me: bool,
}

/// Everything the planner needs at one step from one driver's point of
/// view; goal marginals of the tracked cars are supplied per query.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanContext {
    beta: f64,
    eps_floor: f64,
    risk_weight: f64,
    progress_reward: f64,
    stop_penalty: f64,
    signal_reward: f64,
    danger_threshold: f64,
    own: [Rollout; 3],
    pub tracked: Vec<u32>,
    others: Vec<OtherFacts>,
    /// Phantom risk per own goal as `(ahead only, ahead or unaware)`.
    phantom: [(f64, f64); 3],
    /// `pair[c][d][g_c][g_d]`: c and d conflict, d reaches the intersection
    /// first and c cannot see d.
    pair: Vec<Vec<[[bool; 3]; 3]>>,
}

fn ahead_of(a: f64, a_id: Option<u32>, b: f64, b_id: Option<u32>) -> bool {
    a < b
        || (a == b
            && match (a_id, b_id) {
                (Some(x), Some(y)) => x < y,
                (None, _) => true,
                (Some(_), None) => false,
            })
}

impl PlanContext {
    /// Builds the context for driver `me` perceiving `others`, with
    /// hypothetical cars `(arm, d, v, weight)` and the ids of cars that
    /// honked recently.
    pub fn new(layout: &Layout, me: &CarObs, others: &[CarObs], phantoms: &[(Arm, f64, f64, f64)], recent_honkers: &[u32]) -> Self {
        let cfg = &layout.cfg;
        let h = cfg.horizon;
        let own = three(|g| rollout(layout, me.arm, DrivingGoal::from_index(g), &as_state(me), h));
        let roll: Vec<[Rollout; 3]> = others
            .iter()
            .map(|c| three(|g| rollout(layout, c.arm, DrivingGoal::from_index(g), &as_state(c), h)))
            .collect();
        let sees = |from: &CarObs, to: V2, skip: u32| {
            let occ = others
                .iter()
                .chain(core::iter::once(me))
                .filter(|o| o.id != from.id && o.id != skip)
                .map(|o| o.pos());
            layout.visible(from.pos(), from.heading, to, occ)
        };
        let me_honked = recent_honkers.contains(&me.id);
        let facts = others
            .iter()
            .zip(&roll)
            .map(|(c, rc)| {
                let f = three(|g| three(|gc| pair_facts(layout, &own[g], Some(me.id), &rc[gc], Some(c.id))));
                OtherFacts {
                    conflict: f.map(|r| r.map(|x| x.0)),
                    ahead: f.map(|r| r.map(|x| x.1)),
                    blocking: three(|g| blocks(layout, &own[g], &rc[0])),
                    sees_me: sees(c, me.pos(), me.id),
                    aware_of_me: me_honked || sees(c, me.pos(), me.id),
                }
            })
            .collect();
        let pair = others
            .iter()
            .zip(&roll)
            .map(|(c, rc)| {
                others
                    .iter()
                    .zip(&roll)
                    .map(|(d, rd)| {
                        let blind = c.id != d.id && !recent_honkers.contains(&d.id) && !sees(c, d.pos(), d.id);
                        three(|gc| {
                            three(|gd| {
                                let (hit, d_first) = pair_facts(layout, &rc[gc], Some(c.id), &rd[gd], Some(d.id));
                                blind && hit && d_first
                            })
                        })
                    })
                    .collect()
            })
            .collect();

        let reach = cfg.v_max * h as f64 * cfg.dt + 2.0 * cfg.lane_width;
        let mut safe = [(1.0, 1.0); 3];
        for &(arm, d, v, w) in phantoms {
            if w < 1e-9 || d > reach {
                continue;
            }
            let p = layout.incoming_point(arm, d);
            let ph = CarObs {
                id: u32::MAX,
                arm,
                x: p.x,
                y: p.y,
                heading: arm.incoming_heading(),
                v,
            };
            let rp = three(|g| rollout(layout, arm, DrivingGoal::from_index(g), &as_state(&ph), h));
            let aware = sees(&ph, me.pos(), me.id);
            for (g, s) in safe.iter_mut().enumerate() {
                let (mut r0, mut r1) = (0.0, 0.0);
                for r in &rp {
                    let (hit, first) = pair_facts(layout, &own[g], Some(me.id), r, None);
                    if hit {
                        if first {
                            r0 += w / 3.0;
                        }
                        if first || !aware {
                            r1 += w / 3.0;
                        }
                    }
                }
                s.0 *= 1.0 - r0;
                s.1 *= 1.0 - r1;
            }
        }
        Self {
            beta: cfg.beta,
            eps_floor: cfg.eps_floor,
            risk_weight: cfg.risk_weight,
            progress_reward: cfg.progress_reward,
            stop_penalty: cfg.stop_penalty,
            signal_reward: cfg.signal_reward,
            danger_threshold: cfg.danger_threshold,
            own,
            tracked: others.iter().map(|c| c.id).collect(),
            others: facts,
            phantom: safe.map(|(a, b)| (1.0 - a, 1.0 - b)),
            pair,
        }
    }

    /// Context from a level-0 state belief: perceived cars plus phantoms.
    pub fn from_belief(layout: &Layout, b: &StateBelief, recent_honkers: &[u32]) -> Self {
        let me = CarObs {
            id: b.own_id,
            arm: b.own_arm,
            x: b.own.x,
            y: b.own.y,
            heading: b.own.heading,
            v: b.own.v,
        };
        let phantoms: Vec<_> = b.phantoms().collect();
        Self::new(layout, &me, &b.tracks, &phantoms, recent_honkers)
    }

    /// The Move action for `goal`.
    pub fn move_action(&self, goal: DrivingGoal) -> DrivingAction {
        self.own[goal.index()].first
    }

    /// Collision risk of Move. Level 0 assumes everyone behind it yields;
    /// higher levels also fear cars that cannot see the driver, honk or not.
    pub fn risk(&self, goal: DrivingGoal, marginals: &[[f64; 3]], level: u8) -> f64 {
        let g = goal.index();
        let ph = self.phantom[g];
        let mut safe = 1.0 - if level == 0 { ph.0 } else { ph.1 };
        for (f, m) in self.others.iter().zip(marginals) {
            let r: f64 = (0..3)
                .filter(|&gc| f.conflict[g][gc] && (f.ahead[g][gc] || (level > 0 && !f.sees_me)))
                .map(|gc| m[gc])
                .sum();
            safe *= 1.0 - r.min(1.0);
        }
        1.0 - safe
    }

    /// Whether some tracked car would halt in the path of Move.
    fn blocked(&self, goal: DrivingGoal) -> bool {
        self.others.iter().any(|f| f.blocking[goal.index()])
    }

    /// Some tracked car is likely to hit the driver or another car it
    /// cannot see, while it is the one that should give way.
    pub fn danger(&self, goal: DrivingGoal, marginals: &[[f64; 3]]) -> bool {
        let g = goal.index();
        for (c, (f, mc)) in self.others.iter().zip(marginals).enumerate() {
            if !f.aware_of_me {
                let p: f64 = (0..3)
                    .filter(|&gc| f.conflict[g][gc] && !f.ahead[g][gc])
                    .map(|gc| mc[gc])
                    .sum();
                if p > self.danger_threshold {
                    return true;
                }
            }
            for (d, md) in marginals.iter().enumerate() {
                let t = &self.pair[c][d];
                let mut p = 0.0;
                for gc in 0..3 {
                    for gd in 0..3 {
                        if t[gc][gd] {
                            p += mc[gc] * md[gd];
                        }
                    }
                }
                if p > self.danger_threshold {
                    return true;
                }
            }
        }
        false
    }

    /// Scores of the modes available at `level` (Signal needs level >= 1
    /// and a detected danger). Honking coasts, so Signal pays for cars that
    /// would halt in the driver's path.
    pub fn modes(&self, goal: DrivingGoal, marginals: &[[f64; 3]], level: u8) -> Vec<(Mode, f64)> {
        let mut out = alloc::vec![
            (Mode::Move, self.progress_reward - self.risk_weight * self.risk(goal, marginals, level)),
            (Mode::Stop, -self.stop_penalty),
        ];
        if level > 0 && self.danger(goal, marginals) {
            let penalty = if self.blocked(goal) { self.risk_weight } else { 0.0 };
            out.push((Mode::Signal, self.signal_reward - penalty));
        }
        out
    }

    /// Action distribution: Boltzmann over modes, mapped to actions, then
    /// floored. `marginals[i]` is the goal belief about `tracked[i]`.
    pub fn policy(&self, goal: DrivingGoal, marginals: &[[f64; 3]], level: u8) -> PolicyDistribution {
        let modes = self.modes(goal, marginals, level);
        let scores: Vec<f64> = modes.iter().map(|m| m.1).collect();
        let pm = boltzmann_policy(&scores, self.beta, 0.0);
        let mut probs = [0.0; 5];
        for (i, (m, _)) in modes.iter().enumerate() {
            let a = match m {
                Mode::Move => self.move_action(goal),
                Mode::Stop => DrivingAction::Brake,
                Mode::Signal => DrivingAction::Honk,
            };
            probs[a.index()] += pm.prob(i);
        }
        let k = probs.len() as f64;
        PolicyDistribution::from_probs(probs.iter().map(|p| (1.0 - self.eps_floor) * p + self.eps_floor / k).collect())
    }

    /// Goal-blind policy: every tracked car's goal is uniform.
    pub fn policy_level0(&self, goal: DrivingGoal) -> PolicyDistribution {
        let m = alloc::vec![[1.0 / 3.0; 3]; self.tracked.len()];
        self.policy(goal, &m, 0)
    }
}

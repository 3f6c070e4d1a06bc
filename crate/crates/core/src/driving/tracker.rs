use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::layout::{lane_index, Arm, Layout, V2};
use super::world::{lane_of, CarObs, DrivingObservation, DrivingWorld};
use crate::sampling::stratified_without_replacement;

/// Centers of the distance bins (meters before the intersection).
pub const DISTANCE_BINS: [f64; 4] = [5.0, 15.0, 25.0, 35.0];
/// Centers of the speed bins (m/s).
pub const SPEED_BINS: [f64; 3] = [1.5, 3.5, 5.5];
/// Discrete lane states: absent, or one of 4 x 3 (distance, speed) bins.
pub const LANE_CLASSES: usize = 1 + DISTANCE_BINS.len() * SPEED_BINS.len();

/// Class of a car at `d` meters before the intersection moving at `v`.
pub fn lane_class(d: f64, v: f64) -> usize {
    let db = ((d.max(0.0) / 10.0) as usize).min(DISTANCE_BINS.len() - 1);
    let vb = if v < 2.5 {
        0
    } else if v < 4.5 {
        1
    } else {
        2
    };
    1 + SPEED_BINS.len() * db + vb
}

/// Bin center `(d, v)` of a non-absent class.
pub fn class_center(class: usize) -> (f64, f64) {
    let k = class - 1;
    (DISTANCE_BINS[k / SPEED_BINS.len()], SPEED_BINS[k % SPEED_BINS.len()])
}

/// True class of every incoming lane in `world` as seen by car `me`; its
/// own arm is always class 0.
pub fn true_lane_classes(layout: &Layout, world: &DrivingWorld, me: usize) -> [usize; 4] {
    let mut out = [0; 4];
    let own = world.cars[me].arm;
    for arm in Arm::ALL.into_iter().filter(|&a| a != own) {
        let lane = lane_index(arm, true);
        let nearest = world
            .cars
            .iter()
            .filter(|c| c.arm == arm && lane_of(layout, c.arm, c.pos()) == lane)
            .map(|c| (layout.distance_along(arm, c.pos()), c.state.v))
            .min_by(|a, b| a.0.total_cmp(&b.0));
        if let Some((d, v)) = nearest {
            out[arm.index()] = lane_class(d, v);
        }
    }
    out
}

/// A possible car on an incoming lane, `d` meters before the intersection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaneHypothesis {
    pub d: f64,
    pub v: f64,
    pub weight: f64,
}

/// Belief about the nearest car on one incoming lane.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LaneBelief {
    pub absent: f64,
    pub hyps: Vec<LaneHypothesis>,
    /// Id of the perceived car currently pinning this lane.
    pub known: Option<u32>,
}

impl LaneBelief {
    fn empty() -> Self {
        Self {
            absent: 1.0,
            ..Self::default()
        }
    }

    fn prior(p_exist: f64) -> Self {
        let n = (LANE_CLASSES - 1) as f64;
        let hyps = (1..LANE_CLASSES)
            .map(|c| {
                let (d, v) = class_center(c);
                LaneHypothesis { d, v, weight: p_exist / n }
            })
            .collect();
        Self {
            absent: 1.0 - p_exist,
            hyps,
            known: None,
        }
    }

    pub fn existence(&self) -> f64 {
        1.0 - self.absent
    }

    fn normalize(&mut self) {
        self.hyps.retain(|h| h.weight > 0.0);
        let z = self.absent + self.hyps.iter().map(|h| h.weight).sum::<f64>();
        if z > 0.0 {
            self.absent /= z;
            for h in &mut self.hyps {
                h.weight /= z;
            }
        } else {
            *self = Self::empty();
        }
    }

    /// Probability of each discrete lane class.
    pub fn class_probs(&self) -> [f64; LANE_CLASSES] {
        let mut out = [0.0; LANE_CLASSES];
        out[0] = self.absent;
        for h in &self.hyps {
            out[lane_class(h.d, h.v)] += h.weight;
        }
        out
    }
}

/// How a driver forms its level-0 state belief.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrackerMode<'a> {
    Exact,
    /// Per-lane class proposals (`[4][LANE_CLASSES]`), `n` draws per lane.
    Amortized { proposals: &'a [[f64; LANE_CLASSES]; 4], n: usize },
}

/// A driver's level-0 belief: cars it perceives now, plus a factored
/// belief over the nearest car on each incoming lane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateBelief {
    pub own_id: u32,
    pub own_arm: Arm,
    pub own: super::world::CarState,
    pub attending: bool,
    pub tracks: Vec<CarObs>,
    pub lanes: [LaneBelief; 4],
    /// Observations absorbed so far.
    pub updates: u32,
}

impl StateBelief {
    /// Belief before the first observation. Drivers that are not attentive
    /// assume empty roads.
    pub fn prior(layout: &Layout, own: &super::world::Car) -> Self {
        let p = if own.state.attentive {
            layout.cfg.existence_prior
        } else {
            0.0
        };
        let lanes = core::array::from_fn(|a| {
            if a == own.arm.index() {
                LaneBelief::empty()
            } else {
                LaneBelief::prior(p)
            }
        });
        Self {
            own_id: own.id,
            own_arm: own.arm,
            own: own.state,
            attending: own.attending(),
            tracks: Vec::new(),
            lanes,
            updates: 0,
        }
    }

    /// Hypothetical cars as `(arm, d, v, weight)`, excluding pinned lanes.
    pub fn phantoms(&self) -> impl Iterator<Item = (Arm, f64, f64, f64)> + '_ {
        self.lanes
            .iter()
            .enumerate()
            .filter(|(_, l)| l.known.is_none())
            .flat_map(|(a, l)| l.hyps.iter().map(move |h| (Arm::from_index(a), h.d, h.v, h.weight)))
    }

    pub fn existence(&self) -> [f64; 4] {
        core::array::from_fn(|a| self.lanes[a].existence())
    }

    fn propagate(&mut self, layout: &Layout) {
        let dt = layout.cfg.dt;
        let gone = -2.0 * layout.cfg.lane_width;
        for lane in &mut self.lanes {
            for h in &mut lane.hyps {
                h.d -= h.v * dt;
            }
            let left: f64 = lane.hyps.iter().filter(|h| h.d < gone).map(|h| h.weight).sum();
            lane.absent += left;
            lane.hyps.retain(|h| h.d >= gone);
        }
    }

    fn perceive(&mut self, obs: &DrivingObservation) {
        self.own = obs.own;
        self.attending = obs.attending;
        self.tracks.clear();
        for c in obs.visible.iter().chain(&obs.honks_heard) {
            if !self.tracks.iter().any(|t| t.id == c.id) {
                self.tracks.push(*c);
            }
        }
        self.tracks.sort_by_key(|t| t.id);
    }

    /// Pins lanes holding a perceived car and clears lanes whose car was
    /// seen leaving. Returns which lanes are pinned.
    fn pin(&mut self, layout: &Layout) -> [bool; 4] {
        let mut pinned = [false; 4];
        for arm in Arm::ALL {
            let a = arm.index();
            if a == self.own_arm.index() {
                continue;
            }
            let lane = lane_index(arm, true);
            let here = self
                .tracks
                .iter()
                .filter(|t| t.arm == arm && lane_of(layout, arm, t.pos()) == lane)
                .min_by(|x, y| layout.distance_along(arm, x.pos()).total_cmp(&layout.distance_along(arm, y.pos())));
            if let Some(t) = here {
                self.lanes[a] = LaneBelief {
                    absent: 0.0,
                    hyps: alloc::vec![LaneHypothesis {
                        d: layout.distance_along(arm, t.pos()),
                        v: t.v,
                        weight: 1.0,
                    }],
                    known: Some(t.id),
                };
                pinned[a] = true;
            } else if let Some(id) = self.lanes[a].known {
                if self.tracks.iter().any(|t| t.id == id) {
                    self.lanes[a] = LaneBelief::empty();
                    pinned[a] = true;
                } else {
                    self.lanes[a].known = None;
                }
            }
        }
        pinned
    }

    /// Zeroes every hypothesis that would have been seen.
    fn condition(&mut self, layout: &Layout, pinned: &[bool; 4]) {
        if !self.attending {
            return;
        }
        let me = self.own.pos();
        let occluders: Vec<V2> = self.tracks.iter().map(|t| t.pos()).collect();
        for arm in Arm::ALL {
            if pinned[arm.index()] {
                continue;
            }
            let lane = &mut self.lanes[arm.index()];
            for h in &mut lane.hyps {
                let p = layout.incoming_point(arm, h.d);
                if layout.visible(me, self.own.heading, p, occluders.iter().copied()) {
                    h.weight = 0.0;
                }
            }
            lane.normalize();
        }
    }

    /// Conditions on `obs`, first advancing one step unless this is the
    /// first observation.
    pub fn update<R: Rng + ?Sized>(&mut self, layout: &Layout, obs: &DrivingObservation, mode: TrackerMode<'_>, rng: &mut R) {
        if self.updates > 0 {
            self.propagate(layout);
        }
        self.updates += 1;
        self.perceive(obs);
        let pinned = self.pin(layout);
        if let TrackerMode::Amortized { proposals, n } = mode {
            let p = if self.own.attentive {
                layout.cfg.existence_prior
            } else {
                0.0
            };
            let prior = |c: usize| if c == 0 { 1.0 - p } else { p / (LANE_CLASSES - 1) as f64 };
            for a in 0..4 {
                if pinned[a] || a == self.own_arm.index() {
                    continue;
                }
                let q = &proposals[a];
                let mut lane = LaneBelief {
                    absent: 0.0,
                    hyps: Vec::new(),
                    known: None,
                };
                for draw in stratified_without_replacement(q, n.min(LANE_CLASSES), rng) {
                    let w = prior(draw.index) / draw.density;
                    if draw.index == 0 {
                        lane.absent += w;
                    } else {
                        let (d, v) = class_center(draw.index);
                        lane.hyps.push(LaneHypothesis { d, v, weight: w });
                    }
                }
                lane.normalize();
                self.lanes[a] = lane;
            }
        }
        self.condition(layout, &pinned);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classes_roundtrip_through_centers() {
        for c in 1..LANE_CLASSES {
            let (d, v) = class_center(c);
            assert_eq!(lane_class(d, v), c);
        }
        assert_eq!(lane_class(-3.0, 0.0), 1);
        assert_eq!(lane_class(100.0, 9.0), LANE_CLASSES - 1);
    }

    #[test]
    fn prior_lane_is_normalized() {
        let l = LaneBelief::prior(0.5);
        let total: f64 = l.class_probs().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!((l.existence() - 0.5).abs() < 1e-12);
    }
}

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::layout::{lane_index, Arm, DrivingConfig, Layout, V2, NUM_LANES};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DrivingAction {
    #[serde(rename = "A")]
    Accelerate,
    #[serde(rename = "B")]
    Brake,
    #[serde(rename = "L")]
    RotateLeft,
    #[serde(rename = "R")]
    RotateRight,
    #[serde(rename = "H")]
    Honk,
}

impl DrivingAction {
    pub const ALL: [DrivingAction; 5] = [
        DrivingAction::Accelerate,
        DrivingAction::Brake,
        DrivingAction::RotateLeft,
        DrivingAction::RotateRight,
        DrivingAction::Honk,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i]
    }

    pub fn as_str(self) -> &'static str {
        ["A", "B", "L", "R", "H"][self.index()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DrivingGoal {
    Forward,
    #[serde(rename = "left")]
    LeftTurn,
    #[serde(rename = "right")]
    RightTurn,
}

impl DrivingGoal {
    pub const ALL: [DrivingGoal; 3] = [DrivingGoal::Forward, DrivingGoal::LeftTurn, DrivingGoal::RightTurn];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i]
    }

    /// Counterclockwise quarter turns from straight ahead to the exit arm.
    pub fn quarter_turns(self) -> usize {
        match self {
            DrivingGoal::Forward => 0,
            DrivingGoal::LeftTurn => 1,
            DrivingGoal::RightTurn => 3,
        }
    }
}

/// Kinematic state of one car together with its private attributes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarState {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub v: f64,
    pub goal: DrivingGoal,
    pub attentive: bool,
}

impl CarState {
    pub fn pos(&self) -> V2 {
        V2::new(self.x, self.y)
    }
}

/// Unicycle update with explicit Euler: the position advances with the
/// speed and heading held before the action takes effect.
pub fn kinematics_step(cfg: &DrivingConfig, c: &CarState, a: DrivingAction) -> CarState {
    let mut n = *c;
    n.x += c.v * math::cos(c.heading) * cfg.dt;
    n.y += c.v * math::sin(c.heading) * cfg.dt;
    match a {
        DrivingAction::Accelerate => n.v = (c.v + cfg.accel * cfg.dt).clamp(0.0, cfg.v_max),
        DrivingAction::Brake => n.v = (c.v - cfg.accel * cfg.dt).clamp(0.0, cfg.v_max),
        DrivingAction::RotateLeft => n.heading = math::wrap_angle(c.heading + cfg.turn_rate * cfg.dt),
        DrivingAction::RotateRight => n.heading = math::wrap_angle(c.heading - cfg.turn_rate * cfg.dt),
        DrivingAction::Honk => {}
    }
    n
}

/// A car in the world. `honked` marks a honk on the previous step;
/// `attention` counts remaining steps of attention restored by a honk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Car {
    pub id: u32,
    pub arm: Arm,
    pub state: CarState,
    pub honked: bool,
    pub attention: u32,
}

impl Car {
    pub fn pos(&self) -> V2 {
        self.state.pos()
    }

    pub fn attending(&self) -> bool {
        self.state.attentive || self.attention > 0
    }

    pub fn public(&self) -> CarObs {
        CarObs {
            id: self.id,
            arm: self.arm,
            x: self.state.x,
            y: self.state.y,
            heading: self.state.heading,
            v: self.state.v,
        }
    }
}

/// What another driver can perceive about a car: no goal, no attentiveness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarObs {
    pub id: u32,
    pub arm: Arm,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub v: f64,
}

impl CarObs {
    pub fn pos(&self) -> V2 {
        V2::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrivingObservation {
    pub own: CarState,
    /// Whether the driver was looking (attentive, or alerted by a honk).
    pub attending: bool,
    pub visible: Vec<CarObs>,
    /// Cars that honked on the previous step; a honk reveals where it came from.
    pub honks_heard: Vec<CarObs>,
}

/// One lane slot: `e = 0` with all other fields zero encodes an empty slot.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LaneSlot {
    pub e: u8,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub v: f64,
}

pub type LaneSlots = [[LaneSlot; 2]; NUM_LANES];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct WorldRecord {
    lanes: LaneSlots,
    cars: Vec<Car>,
    collisions: Vec<[u32; 2]>,
}

/// The full physical state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "WorldRecord", from = "WorldRecord")]
pub struct DrivingWorld {
    pub cars: Vec<Car>,
    /// Pairs of car ids whose discs overlap in this state.
    pub collisions: Vec<[u32; 2]>,
}

impl From<DrivingWorld> for WorldRecord {
    fn from(w: DrivingWorld) -> Self {
        let layout = Layout::new(DrivingConfig::default());
        WorldRecord {
            lanes: encode_lanes(&layout, &w.cars.iter().map(Car::public).collect::<Vec<_>>()),
            cars: w.cars,
            collisions: w.collisions,
        }
    }
}

impl From<WorldRecord> for DrivingWorld {
    fn from(r: WorldRecord) -> Self {
        DrivingWorld {
            cars: r.cars,
            collisions: r.collisions,
        }
    }
}

/// Lane holding a car: its entry arm's incoming lane until it is in another
/// arm's region, then that arm's outgoing lane.
pub fn lane_of(layout: &Layout, arm: Arm, p: V2) -> usize {
    match layout.arm_at(p) {
        Some(a) if a != arm => lane_index(a, false),
        _ => lane_index(arm, true),
    }
}

/// Signed distance to the intersection along a lane's arm.
pub fn lane_distance(layout: &Layout, lane: usize, p: V2) -> f64 {
    layout.distance_along(Arm::from_index(lane / 2), p)
}

/// Per lane, the (up to) two cars nearest the intersection, nearest first.
pub fn encode_lanes(layout: &Layout, cars: &[CarObs]) -> LaneSlots {
    let mut by_lane: [Vec<(f64, &CarObs)>; NUM_LANES] = Default::default();
    for c in cars {
        let lane = lane_of(layout, c.arm, c.pos());
        by_lane[lane].push((lane_distance(layout, lane, c.pos()), c));
    }
    let mut out = LaneSlots::default();
    for (lane, cs) in by_lane.iter_mut().enumerate() {
        cs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.id.cmp(&b.1.id)));
        for (slot, (_, c)) in cs.iter().take(2).enumerate() {
            out[lane][slot] = LaneSlot {
                e: 1,
                x: c.x,
                y: c.y,
                heading: c.heading,
                v: c.v,
            };
        }
    }
    out
}

/// Occupied slots as `(lane, x, y, heading, v)`.
pub fn decode_lanes(lanes: &LaneSlots) -> Vec<(usize, f64, f64, f64, f64)> {
    let mut out = Vec::new();
    for (k, lane) in lanes.iter().enumerate() {
        for s in lane.iter().filter(|s| s.e == 1) {
            out.push((k, s.x, s.y, s.heading, s.v));
        }
    }
    out
}

impl DrivingWorld {
    pub fn new(cars: Vec<Car>, layout: &Layout) -> Self {
        let mut w = Self {
            cars,
            collisions: Vec::new(),
        };
        w.collisions = w.find_collisions(layout);
        w
    }

    pub fn car(&self, id: u32) -> Option<&Car> {
        self.cars.iter().find(|c| c.id == id)
    }

    fn find_collisions(&self, layout: &Layout) -> Vec<[u32; 2]> {
        let r = 2.0 * layout.cfg.car_radius;
        let mut out = Vec::new();
        for (i, a) in self.cars.iter().enumerate() {
            for b in &self.cars[i + 1..] {
                if a.pos().dist(b.pos()) < r {
                    out.push([a.id, b.id]);
                }
            }
        }
        out
    }

    /// Simultaneous step: `actions[i]` is the action of `cars[i]`.
    pub fn step(&self, layout: &Layout, actions: &[DrivingAction]) -> DrivingWorld {
        let any_honk = actions.contains(&DrivingAction::Honk);
        let cars = self
            .cars
            .iter()
            .zip(actions)
            .map(|(c, &a)| Car {
                id: c.id,
                arm: c.arm,
                state: kinematics_step(&layout.cfg, &c.state, a),
                honked: a == DrivingAction::Honk,
                attention: if any_honk {
                    layout.cfg.honk_attention_steps
                } else {
                    c.attention.saturating_sub(1)
                },
            })
            .collect();
        DrivingWorld::new(cars, layout)
    }

    /// Whether car `j` is visible to car `i` (ignores attentiveness).
    pub fn sees(&self, layout: &Layout, i: usize, j: usize) -> bool {
        let (a, b) = (&self.cars[i], &self.cars[j]);
        let occluders = self
            .cars
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != i && k != j)
            .map(|(_, c)| c.pos());
        layout.visible(a.pos(), a.state.heading, b.pos(), occluders)
    }

    pub fn observe(&self, layout: &Layout, i: usize) -> DrivingObservation {
        let me = &self.cars[i];
        let visible = if me.attending() {
            (0..self.cars.len())
                .filter(|&j| j != i && self.sees(layout, i, j))
                .map(|j| self.cars[j].public())
                .collect()
        } else {
            Vec::new()
        };
        let honks_heard = self
            .cars
            .iter()
            .enumerate()
            .filter(|&(j, c)| j != i && c.honked)
            .map(|(_, c)| c.public())
            .collect();
        DrivingObservation {
            own: me.state,
            attending: me.attending(),
            visible,
            honks_heard,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn car(x: f64, y: f64, heading: f64, v: f64) -> CarState {
        CarState {
            x,
            y,
            heading,
            v,
            goal: DrivingGoal::Forward,
            attentive: true,
        }
    }

    #[test]
    fn accelerate_moves_with_the_old_speed() {
        let cfg = DrivingConfig::default();
        let n = kinematics_step(&cfg, &car(0.0, 0.0, 0.0, 2.0), DrivingAction::Accelerate);
        assert!((n.x - 1.0).abs() < 1e-12 && n.y.abs() < 1e-12);
        assert!((n.v - 3.0).abs() < 1e-12);
    }

    #[test]
    fn braking_at_rest_stays_put() {
        let cfg = DrivingConfig::default();
        let c = car(3.0, 4.0, 1.0, 0.0);
        assert_eq!(kinematics_step(&cfg, &c, DrivingAction::Brake), c);
    }

    #[test]
    fn honk_coasts() {
        let cfg = DrivingConfig::default();
        let c = car(0.0, 0.0, 0.5, 4.0);
        let n = kinematics_step(&cfg, &c, DrivingAction::Honk);
        assert_eq!((n.heading, n.v), (c.heading, c.v));
        assert!((n.pos().dist(c.pos()) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rotation_wraps_heading() {
        let cfg = DrivingConfig::default();
        let c = car(0.0, 0.0, 3.1, 0.0);
        let n = kinematics_step(&cfg, &c, DrivingAction::RotateLeft);
        assert!(n.heading < 0.0 && n.heading >= -core::f64::consts::PI);
    }

    #[test]
    fn actions_serialize_as_letters() {
        for a in DrivingAction::ALL {
            let s = serde_json::to_string(&a).unwrap();
            assert_eq!(s, alloc::format!("\"{}\"", a.as_str()));
        }
    }
}

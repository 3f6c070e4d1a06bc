use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::{Add, Mul, Sub};
use serde::{Deserialize, Serialize};

use crate::math;

/// A point or direction in the world frame (x east, y north, meters).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct V2 {
    pub x: f64,
    pub y: f64,
}

impl V2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_heading(h: f64) -> Self {
        Self::new(math::cos(h), math::sin(h))
    }

    pub fn dot(self, o: V2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn norm(self) -> f64 {
        math::hypot(self.x, self.y)
    }

    pub fn dist(self, o: V2) -> f64 {
        (self - o).norm()
    }

    pub fn heading(self) -> f64 {
        math::atan2(self.y, self.x)
    }

    /// Rotated by -90 degrees: the right-hand side of a direction.
    pub fn right(self) -> V2 {
        V2::new(self.y, -self.x)
    }
}

impl Add for V2 {
    type Output = V2;
    fn add(self, o: V2) -> V2 {
        V2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for V2 {
    type Output = V2;
    fn sub(self, o: V2) -> V2 {
        V2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for V2 {
    type Output = V2;
    fn mul(self, k: f64) -> V2 {
        V2::new(self.x * k, self.y * k)
    }
}

/// One of the four roads meeting at the intersection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    South,
    East,
    North,
    West,
}

impl Arm {
    pub const ALL: [Arm; 4] = [Arm::South, Arm::East, Arm::North, Arm::West];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Arm {
        Arm::ALL[i % 4]
    }

    /// Unit vector pointing from the intersection out along this arm.
    pub fn outward(self) -> V2 {
        match self {
            Arm::South => V2::new(0.0, -1.0),
            Arm::East => V2::new(1.0, 0.0),
            Arm::North => V2::new(0.0, 1.0),
            Arm::West => V2::new(-1.0, 0.0),
        }
    }

    /// Heading of traffic arriving on this arm.
    pub fn incoming_heading(self) -> f64 {
        (self.outward() * -1.0).heading()
    }

    /// Arm a car entering from `self` leaves by, for a goal given as the
    /// number of counterclockwise quarter turns from straight ahead
    /// (0 forward, 1 left, 3 right).
    pub fn exit(self, quarter_turns: usize) -> Arm {
        Arm::from_index(self.index() + 2 + quarter_turns)
    }
}

/// Lane index `2 * arm + dir` with `dir` 0 for incoming traffic, 1 for outgoing.
pub const NUM_LANES: usize = 8;

pub fn lane_index(arm: Arm, incoming: bool) -> usize {
    2 * arm.index() + usize::from(!incoming)
}

/// Geometry, kinematics, perception and planner constants of the Driving world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DrivingConfig {
    pub lane_width: f64,
    pub arm_length: f64,
    /// Gap between the road edge and the corner buildings.
    pub sidewalk: f64,
    pub dt: f64,
    pub accel: f64,
    pub turn_rate: f64,
    pub v_max: f64,
    /// Speed cap while approaching and taking a turn.
    pub v_turn: f64,
    /// Distance before the intersection at which turning cars slow down.
    pub turn_slowdown: f64,
    pub lookahead: f64,
    pub car_radius: f64,
    pub fov_half_angle: f64,
    pub view_range: f64,
    pub existence_prior: f64,
    pub p_aware: f64,
    pub danger_threshold: f64,
    pub risk_weight: f64,
    pub progress_reward: f64,
    pub stop_penalty: f64,
    pub signal_reward: f64,
    /// Planner lookahead in steps.
    pub horizon: usize,
    pub safety_margin: f64,
    pub honk_attention_steps: u32,
    pub beta: f64,
    pub eps_floor: f64,
    pub t_max: usize,
    /// End an episode early once every car is out of the box on its exit arm.
    pub end_when_cleared: bool,
    pub spawn_distance: (f64, f64),
    pub spawn_speed: (f64, f64),
    /// Draws per lane for amortized state tracking.
    pub state_particles: usize,
}

impl Default for DrivingConfig {
    fn default() -> Self {
        Self {
            lane_width: 4.0,
            arm_length: 40.0,
            sidewalk: 2.0,
            dt: 0.5,
            accel: 2.0,
            turn_rate: PI / 6.0,
            v_max: 6.0,
            v_turn: 1.0,
            turn_slowdown: 12.0,
            lookahead: 4.0,
            car_radius: 1.0,
            fov_half_angle: PI / 3.0,
            view_range: 40.0,
            existence_prior: 0.5,
            p_aware: 0.3,
            danger_threshold: 0.5,
            risk_weight: 10.0,
            progress_reward: 1.0,
            stop_penalty: 0.5,
            signal_reward: 1.0,
            horizon: 6,
            safety_margin: 0.5,
            honk_attention_steps: 5,
            beta: crate::ipomdp::DEFAULT_BETA,
            eps_floor: crate::ipomdp::DEFAULT_EPS_FLOOR,
            t_max: 40,
            end_when_cleared: true,
            spawn_distance: (10.0, 35.0),
            spawn_speed: (2.0, 5.0),
            state_particles: 4,
        }
    }
}

/// Axis-aligned building footprint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: V2,
    pub max: V2,
}

impl Rect {
    pub fn contains(&self, p: V2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    /// Whether the closed segment `a`-`b` touches the rectangle (Liang-Barsky).
    pub fn hits_segment(&self, a: V2, b: V2) -> bool {
        let d = b - a;
        let mut t0: f64 = 0.0;
        let mut t1: f64 = 1.0;
        for (p, q) in [
            (-d.x, a.x - self.min.x),
            (d.x, self.max.x - a.x),
            (-d.y, a.y - self.min.y),
            (d.y, self.max.y - a.y),
        ] {
            if p == 0.0 {
                if q < 0.0 {
                    return false;
                }
            } else {
                let r = q / p;
                if p < 0.0 {
                    t0 = t0.max(r);
                } else {
                    t1 = t1.min(r);
                }
                if t0 > t1 {
                    return false;
                }
            }
        }
        true
    }
}

/// Distance from `p` to the segment `a`-`b`.
pub fn segment_distance(a: V2, b: V2, p: V2) -> f64 {
    let d = b - a;
    let len2 = d.dot(d);
    let t = if len2 == 0.0 { 0.0 } else { ((p - a).dot(d) / len2).clamp(0.0, 1.0) };
    (a + d * t).dist(p)
}

/// A route through the intersection sampled as a dense polyline.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub points: Vec<V2>,
    /// Arc length at which the route enters the intersection box.
    pub entry_s: f64,
    /// Arc length at which it leaves the intersection box.
    pub exit_s: f64,
    pub turning: bool,
}

const PATH_SPACING: f64 = 0.5;

impl Path {
    pub fn s_at(&self, i: usize) -> f64 {
        i as f64 * PATH_SPACING
    }

    /// Index of the path point nearest `p`, searched around `hint` when given.
    pub fn project(&self, p: V2, hint: Option<usize>) -> usize {
        let (lo, hi) = match hint {
            Some(h) => (h.saturating_sub(4), (h + 24).min(self.points.len())),
            None => (0, self.points.len()),
        };
        let mut best = lo;
        let mut best_d = f64::INFINITY;
        for i in lo..hi {
            let d = self.points[i].dist(p);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Point `ahead` meters further along the path than index `i`.
    pub fn ahead(&self, i: usize, ahead: f64) -> V2 {
        let k = i + (ahead / PATH_SPACING) as usize;
        self.points[k.min(self.points.len() - 1)]
    }
}

fn push_line(out: &mut Vec<V2>, a: V2, b: V2) {
    let n = math::round(a.dist(b) / PATH_SPACING).max(1.0) as usize;
    for k in 0..n {
        out.push(a + (b - a) * (k as f64 / n as f64));
    }
}

/// Resamples a polyline at uniform arc-length spacing.
fn resample(raw: &[V2]) -> Vec<V2> {
    let mut out = alloc::vec![raw[0]];
    let mut carry = 0.0;
    for w in raw.windows(2) {
        let seg = w[1] - w[0];
        let len = seg.norm();
        let mut s = PATH_SPACING - carry;
        while s <= len {
            out.push(w[0] + seg * (s / len));
            s += PATH_SPACING;
        }
        carry = len - (s - PATH_SPACING);
    }
    out
}

/// The static world: roads, buildings and the twelve routes.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub cfg: DrivingConfig,
    pub buildings: [Rect; 4],
    paths: Vec<Path>,
}

impl Layout {
    pub fn new(cfg: DrivingConfig) -> Self {
        let w = cfg.lane_width;
        let lo = w + cfg.sidewalk;
        let hi = w + cfg.arm_length;
        let buildings = [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)].map(|(sx, sy): (f64, f64)| {
            let xs = [sx * lo, sx * hi];
            let ys = [sy * lo, sy * hi];
            Rect {
                min: V2::new(xs[0].min(xs[1]), ys[0].min(ys[1])),
                max: V2::new(xs[0].max(xs[1]), ys[0].max(ys[1])),
            }
        });
        let mut layout = Self {
            cfg,
            buildings,
            paths: Vec::new(),
        };
        for arm in Arm::ALL {
            for g in super::DrivingGoal::ALL {
                let p = layout.build_path(arm, arm.exit(g.quarter_turns()));
                layout.paths.push(p);
            }
        }
        layout
    }

    pub fn half_width(&self) -> f64 {
        self.cfg.lane_width
    }

    /// Point on the incoming lane of `arm` at `d` meters before the
    /// intersection (negative inside it, continuing straight).
    pub fn incoming_point(&self, arm: Arm, d: f64) -> V2 {
        let w = self.cfg.lane_width;
        let u = arm.outward();
        u * (w + d) + (u * -1.0).right() * (w / 2.0)
    }

    /// Point on the outgoing lane of `arm` at `d` meters past the intersection.
    pub fn outgoing_point(&self, arm: Arm, d: f64) -> V2 {
        let w = self.cfg.lane_width;
        let u = arm.outward();
        u * (w + d) - (u * -1.0).right() * (w / 2.0)
    }

    fn build_path(&self, from: Arm, to: Arm) -> Path {
        let l = self.cfg.arm_length;
        let start = self.incoming_point(from, l);
        let entry = self.incoming_point(from, 0.0);
        let exit = self.outgoing_point(to, 0.0);
        let end = self.outgoing_point(to, l + 100.0);
        let mut raw = Vec::new();
        push_line(&mut raw, start, entry);
        let turning = to != from.exit(0);
        if turning {
            let dir = from.outward() * -1.0;
            let c = entry + dir * (exit - entry).dot(dir);
            for k in 0..16 {
                let t = k as f64 / 16.0;
                let a = entry * ((1.0 - t) * (1.0 - t)) + c * (2.0 * t * (1.0 - t)) + exit * (t * t);
                raw.push(a);
            }
        } else {
            push_line(&mut raw, entry, exit);
        }
        push_line(&mut raw, exit, end);
        raw.push(end);
        let points = resample(&raw);
        let entry_i = points.iter().position(|p| self.in_box(*p)).unwrap_or(0);
        let exit_i = points.iter().rposition(|p| self.in_box(*p)).unwrap_or(0);
        Path {
            entry_s: entry_i as f64 * PATH_SPACING,
            exit_s: exit_i as f64 * PATH_SPACING,
            points,
            turning,
        }
    }

    pub fn path(&self, arm: Arm, goal: super::DrivingGoal) -> &Path {
        &self.paths[3 * arm.index() + goal.index()]
    }

    /// Inside the square where the two roads overlap.
    pub fn in_box(&self, p: V2) -> bool {
        let w = self.cfg.lane_width + 1e-9;
        p.x.abs() <= w && p.y.abs() <= w
    }

    /// Whether a car from `arm` with `goal` at `p` has crossed and left the box.
    pub fn cleared(&self, arm: Arm, goal: super::DrivingGoal, p: V2) -> bool {
        let exit = self.path(arm, goal).points.last().and_then(|&q| self.arm_at(q));
        exit.is_some() && self.arm_at(p) == exit
    }

    /// Arm region containing `p`, or `None` inside the intersection box.
    pub fn arm_at(&self, p: V2) -> Option<Arm> {
        if self.in_box(p) {
            return None;
        }
        Some(if p.x.abs() > p.y.abs() {
            if p.x > 0.0 {
                Arm::East
            } else {
                Arm::West
            }
        } else if p.y > 0.0 {
            Arm::North
        } else {
            Arm::South
        })
    }

    /// Signed distance from `p` to the intersection box along `arm`.
    pub fn distance_along(&self, arm: Arm, p: V2) -> f64 {
        p.dot(arm.outward()) - self.cfg.lane_width
    }

    /// Whether a building blocks the line of sight from `a` to `b`.
    pub fn building_blocks(&self, a: V2, b: V2) -> bool {
        self.buildings.iter().any(|r| r.hits_segment(a, b))
    }

    /// Field-of-view and range test from a viewer at `from` facing `heading`.
    pub fn in_view(&self, from: V2, heading: f64, to: V2) -> bool {
        let d = to - from;
        let r = d.norm();
        if r > self.cfg.view_range {
            return false;
        }
        if r == 0.0 {
            return true;
        }
        math::wrap_angle(d.heading() - heading).abs() <= self.cfg.fov_half_angle
    }

    /// Full visibility test: field of view, range, buildings and the discs of
    /// `occluders` (other cars).
    pub fn visible(&self, from: V2, heading: f64, to: V2, occluders: impl IntoIterator<Item = V2>) -> bool {
        self.in_view(from, heading, to)
            && !self.building_blocks(from, to)
            && occluders
                .into_iter()
                .all(|c| segment_distance(from, to, c) >= self.cfg.car_radius)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::driving::DrivingGoal;

    #[test]
    fn incoming_lanes_keep_right() {
        let l = Layout::new(DrivingConfig::default());
        let w = l.cfg.lane_width;
        let p = l.incoming_point(Arm::South, 10.0);
        assert!((p.x - w / 2.0).abs() < 1e-12 && (p.y + w + 10.0).abs() < 1e-12);
        let q = l.outgoing_point(Arm::North, 0.0);
        assert!((q.x - w / 2.0).abs() < 1e-12 && (q.y - w).abs() < 1e-12);
    }

    #[test]
    fn exits_follow_right_hand_traffic() {
        assert_eq!(Arm::South.exit(0), Arm::North);
        assert_eq!(Arm::South.exit(3), Arm::East);
        assert_eq!(Arm::South.exit(1), Arm::West);
        assert_eq!(Arm::East.exit(1), Arm::South);
    }

    #[test]
    fn paths_are_evenly_spaced_and_connected() {
        let l = Layout::new(DrivingConfig::default());
        for arm in Arm::ALL {
            for g in DrivingGoal::ALL {
                let p = l.path(arm, g);
                for w in p.points.windows(2) {
                    assert!(w[0].dist(w[1]) <= PATH_SPACING + 1e-9);
                }
                assert!(p.entry_s > 0.0 && p.exit_s > p.entry_s);
                let end = *p.points.last().unwrap();
                assert_eq!(l.arm_at(end), Some(arm.exit(g.quarter_turns())));
            }
        }
    }

    #[test]
    fn segment_rectangle_cases() {
        let r = Rect {
            min: V2::new(0.0, 0.0),
            max: V2::new(1.0, 1.0),
        };
        assert!(r.hits_segment(V2::new(-1.0, 0.5), V2::new(2.0, 0.5)));
        assert!(!r.hits_segment(V2::new(-1.0, 1.5), V2::new(2.0, 1.5)));
        assert!(r.hits_segment(V2::new(0.5, 0.5), V2::new(0.6, 0.6)));
        assert!(!r.hits_segment(V2::new(2.0, -1.0), V2::new(3.0, 2.0)));
    }
}

use alloc::vec::Vec;

use super::layout::{Arm, Layout, NUM_LANES};
use super::synth::DrivingEpisode;
use super::world::{encode_lanes, lane_distance, CarObs, DrivingAction, DrivingObservation, DrivingWorld};
use crate::math;
use crate::neural::FeatureVector;

/// Number of past frames in every feature vector.
pub const DRIVING_HISTORY_K: usize = 4;
/// Car slots in observer features.
pub const MAX_CARS: usize = 4;

const SLOT_DIM: usize = 7;
const FRAME_DIM: usize = NUM_LANES * 2 * SLOT_DIM;
const NUM_ACTIONS: usize = DrivingAction::ALL.len();
const CAR_DIM: usize = 1 + 4 + 6 + 1 + DRIVING_HISTORY_K * NUM_ACTIONS;

fn heading_bucket(h: f64) -> usize {
    let q = math::round(math::wrap_angle(h) / core::f64::consts::FRAC_PI_2) as i64;
    q.rem_euclid(4) as usize
}

fn push_one_hot(out: &mut Vec<f64>, k: usize, n: usize) {
    out.extend((0..n).map(|i| if i == k { 1.0 } else { 0.0 }));
}

fn push_frame(out: &mut Vec<f64>, layout: &Layout, cars: Option<&[CarObs]>) {
    let Some(cars) = cars else {
        out.extend(core::iter::repeat_n(0.0, FRAME_DIM));
        return;
    };
    let l = layout.cfg.arm_length;
    for (lane, slots) in encode_lanes(layout, cars).iter().enumerate() {
        for s in slots {
            if s.e == 0 {
                out.extend([0.0; SLOT_DIM]);
                continue;
            }
            let p = super::layout::V2::new(s.x, s.y);
            out.push(1.0);
            out.push(lane_distance(layout, lane, p) / l);
            out.push(s.v / layout.cfg.v_max);
            push_one_hot(out, heading_bucket(s.heading), 4);
        }
    }
}

fn push_action(out: &mut Vec<f64>, a: Option<DrivingAction>) {
    match a {
        Some(a) => push_one_hot(out, a.index(), NUM_ACTIONS),
        None => out.extend([0.0; NUM_ACTIONS]),
    }
}

pub fn driver_feature_dim() -> usize {
    DRIVING_HISTORY_K * FRAME_DIM + 11 + 4 + DRIVING_HISTORY_K * NUM_ACTIONS
}

/// Features of one driver's own history: perceived cars over the last
/// frames, its own kinematic state, honks it hears and its last actions.
/// `obs` runs up to the current step, `actions` are the driver's earlier
/// actions.
pub fn driver_features(layout: &Layout, own_arm: Arm, obs: &[DrivingObservation], actions: &[DrivingAction]) -> FeatureVector {
    let cfg = &layout.cfg;
    let mut out = Vec::with_capacity(driver_feature_dim());
    for k in 0..DRIVING_HISTORY_K {
        let frame = obs.len().checked_sub(k + 1).map(|i| {
            let o = &obs[i];
            o.visible.iter().chain(&o.honks_heard).copied().collect::<Vec<_>>()
        });
        push_frame(&mut out, layout, frame.as_deref());
    }
    if let Some(o) = obs.last() {
        let l = cfg.arm_length;
        out.extend([
            o.own.x / l,
            o.own.y / l,
            math::cos(o.own.heading),
            math::sin(o.own.heading),
            o.own.v / cfg.v_max,
        ]);
        push_one_hot(&mut out, own_arm.index(), 4);
        out.push(f64::from(u8::from(o.attending)));
        out.push((obs.len() - 1) as f64 / cfg.t_max as f64);
        let mut honks = [0.0; 4];
        for h in &o.honks_heard {
            honks[h.arm.index()] = 1.0;
        }
        out.extend(honks);
    } else {
        out.extend([0.0; 15]);
    }
    for k in 0..DRIVING_HISTORY_K {
        push_action(&mut out, actions.len().checked_sub(k + 1).map(|i| actions[i]));
    }
    FeatureVector::new(out)
}

pub fn observer_feature_dim() -> usize {
    DRIVING_HISTORY_K * FRAME_DIM + MAX_CARS * CAR_DIM + 1
}

/// Observer features at step `t` of `ep` (states up to `t`, actions
/// before `t`), with `target`'s car slot first and the rest by index.
pub fn observer_features(layout: &Layout, ep: &DrivingEpisode, t: usize, target: usize) -> FeatureVector {
    let cfg = &layout.cfg;
    let world = |i: usize| -> &DrivingWorld { &ep.steps[i].state };
    let mut out = Vec::with_capacity(observer_feature_dim());
    for k in 0..DRIVING_HISTORY_K {
        let frame = t
            .checked_sub(k)
            .map(|i| world(i).cars.iter().map(|c| c.public()).collect::<Vec<_>>());
        push_frame(&mut out, layout, frame.as_deref());
    }
    let now = world(t);
    let mut order: Vec<usize> = (0..now.cars.len()).filter(|&i| i != target).collect();
    order.insert(0, target);
    for slot in 0..MAX_CARS {
        let Some(&i) = order.get(slot) else {
            out.extend(core::iter::repeat_n(0.0, CAR_DIM));
            continue;
        };
        let c = &now.cars[i];
        let l = cfg.arm_length;
        out.push(1.0);
        push_one_hot(&mut out, c.arm.index(), 4);
        out.extend([
            c.state.x / l,
            c.state.y / l,
            math::cos(c.state.heading),
            math::sin(c.state.heading),
            c.state.v / cfg.v_max,
            layout.distance_along(c.arm, c.pos()) / l,
        ]);
        out.push(f64::from(u8::from(c.honked)));
        for k in 0..DRIVING_HISTORY_K {
            push_action(&mut out, t.checked_sub(k + 1).map(|s| ep.steps[s].actions[i]));
        }
    }
    out.push(t as f64 / cfg.t_max as f64);
    FeatureVector::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heading_buckets_follow_compass() {
        use core::f64::consts::{FRAC_PI_2, PI};
        assert_eq!(heading_bucket(0.0), 0);
        assert_eq!(heading_bucket(FRAC_PI_2), 1);
        assert_eq!(heading_bucket(PI), 2);
        assert_eq!(heading_bucket(-PI), 2);
        assert_eq!(heading_bucket(-FRAC_PI_2), 3);
    }

    #[test]
    fn empty_history_has_fixed_width() {
        let l = Layout::new(Default::default());
        assert_eq!(driver_features(&l, Arm::South, &[], &[]).len(), driver_feature_dim());
    }
}

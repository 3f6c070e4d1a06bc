use alloc::vec;
use alloc::vec::Vec;

use super::features::{driver_features, observer_features, MAX_CARS};
use super::layout::Layout;
use super::synth::{episode_worlds, DrivingEpisode};
use super::tracker::{true_lane_classes, LANE_CLASSES};
use super::world::{DrivingAction, DrivingGoal};
use crate::neural::{FeatureVector, TrainingSequence, IGNORE_TARGET};

/// Output heads of the level-0 state proposal: one lane class per arm.
pub const STATE_HEADS: [usize; 4] = [LANE_CLASSES; 4];
/// Output heads of the level-1 proposal: one goal per other car slot.
pub const OTHER_GOAL_HEADS: [usize; MAX_CARS - 1] = [3; MAX_CARS - 1];

/// Per car: features of its own history at every step with the true class
/// of every incoming lane as targets.
pub fn state_sequences(layout: &Layout, eps: &[DrivingEpisode]) -> Vec<TrainingSequence> {
    let mut out = Vec::new();
    for ep in eps {
        let worlds = episode_worlds(layout, ep);
        for c in 0..ep.agents.len() {
            let arm = worlds[0].cars[c].arm;
            let mut obs = Vec::with_capacity(ep.len());
            let mut acts: Vec<DrivingAction> = Vec::with_capacity(ep.len());
            let mut seq = TrainingSequence {
                features: Vec::with_capacity(ep.len()),
                targets: Vec::with_capacity(ep.len()),
            };
            for (t, step) in ep.steps.iter().enumerate() {
                obs.push(worlds[t].observe(layout, c));
                seq.features.push(driver_features(layout, arm, &obs, &acts));
                seq.targets.push(true_lane_classes(layout, &worlds[t], c).to_vec());
                acts.push(step.actions[c]);
            }
            out.push(seq);
        }
    }
    out
}

/// Observer features of every step of `ep` with `target` first.
pub fn observer_sequence(layout: &Layout, ep: &DrivingEpisode, target: usize) -> Vec<FeatureVector> {
    (0..ep.len()).map(|t| observer_features(layout, ep, t, target)).collect()
}

/// Per (episode, target car): the goals of the other cars in index order,
/// with missing slots left unlabeled.
pub fn other_goal_sequences(layout: &Layout, eps: &[DrivingEpisode]) -> Vec<TrainingSequence> {
    per_target(layout, eps, |ep, target, _| {
        let mut goals: Vec<usize> = ep
            .agents
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != target)
            .map(|(_, a)| a.goal as usize)
            .collect();
        goals.resize(OTHER_GOAL_HEADS.len(), IGNORE_TARGET);
        goals
    })
}

/// Per (episode, target car): the target's own goal.
pub fn target_goal_sequences(layout: &Layout, eps: &[DrivingEpisode]) -> Vec<TrainingSequence> {
    per_target(layout, eps, |ep, target, _| vec![ep.agents[target].goal as usize])
}

/// Per (episode, target car): the target's next action.
pub fn action_sequences(layout: &Layout, eps: &[DrivingEpisode]) -> Vec<TrainingSequence> {
    per_target(layout, eps, |ep, target, t| vec![ep.steps[t].actions[target].index()])
}

fn per_target(
    layout: &Layout,
    eps: &[DrivingEpisode],
    target_of: impl Fn(&DrivingEpisode, usize, usize) -> Vec<usize>,
) -> Vec<TrainingSequence> {
    let mut out = Vec::new();
    for ep in eps {
        for target in 0..ep.agents.len() {
            out.push(TrainingSequence {
                features: observer_sequence(layout, ep, target),
                targets: (0..ep.len()).map(|t| target_of(ep, target, t)).collect(),
            });
        }
    }
    out
}

/// Joint proposal over the other cars' goals (base 3, slot 0 least
/// significant) from concatenated per-slot heads.
pub fn joint_goal_proposal(heads: &[f64], n_others: usize) -> Vec<f64> {
    let k = DrivingGoal::ALL.len();
    let size = k.pow(n_others as u32);
    (0..size)
        .map(|h| {
            (0..n_others)
                .map(|s| heads[s * k + (h / k.pow(s as u32)) % k])
                .product()
        })
        .collect()
}

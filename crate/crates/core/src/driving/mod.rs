//! The Driving domain: a four-way intersection with occluding buildings,
//! simple car kinematics, level-0 state tracking, a mode-based planner and
//! episode synthesis.

mod features;
mod layout;
mod model;
mod planner;
mod synth;
mod tracker;
mod training;
mod world;

pub use features::{
    driver_feature_dim, driver_features, observer_feature_dim, observer_features, DRIVING_HISTORY_K, MAX_CARS,
};
pub use layout::{lane_index, segment_distance, Arm, DrivingConfig, Layout, Path, Rect, NUM_LANES, V2};
pub use planner::{move_action, rollout, Mode, PlanContext, Rollout};
pub use model::DrivingModel;
pub use synth::{
    episode_worlds, recent_honkers, scripted_episode, synthesize_driving, synthesize_driving_at_level, synthesize_driving_from_seed, view_likelihoods,
    Driver, DriverRecord, DrivingEpisode, DrivingKind,
};
pub use training::{
    action_sequences, joint_goal_proposal, observer_sequence, other_goal_sequences, state_sequences, target_goal_sequences,
    OTHER_GOAL_HEADS, STATE_HEADS,
};
pub use tracker::{
    class_center, lane_class, true_lane_classes, LaneBelief, LaneHypothesis, StateBelief, TrackerMode, DISTANCE_BINS,
    LANE_CLASSES, SPEED_BINS,
};
pub use world::{
    decode_lanes, encode_lanes, kinematics_step, lane_distance, lane_of, Car, CarObs, CarState, DrivingAction,
    DrivingGoal, DrivingObservation, DrivingWorld, LaneSlot, LaneSlots,
};

use alloc::vec;
use alloc::vec::Vec;

use super::layout::Layout;
use super::planner::PlanContext;
use super::synth::{episode_worlds, recent_honkers, view_likelihoods, Driver, DrivingEpisode};
use super::world::DrivingGoal;
use crate::inference::NestedGoalModel;
use crate::ipomdp::PolicyDistribution;
use crate::rng::rng_from;
use crate::{Error, Result};

/// A recorded Driving episode as a nested inference problem about one
/// target driver: lower hypotheses are the joint goals of the other cars
/// (base 3, other cars in index order), upper goals the target's own.
/// The target's view is replayed with exact state tracking.
#[derive(Debug, Clone)]
pub struct DrivingModel {
    target: usize,
    others: Vec<usize>,
    contexts: Vec<PlanContext>,
    /// Per step, `(slot among others, likelihood per goal)` for every car
    /// the target perceives.
    lik: Vec<Vec<(usize, [f64; 3])>>,
    actions: Vec<usize>,
}

impl DrivingModel {
    pub fn new(layout: &Layout, ep: &DrivingEpisode, target: usize) -> Result<Self> {
        let worlds = episode_worlds(layout, ep);
        let first = worlds.first().ok_or(Error::InvalidConfig("episode has no steps"))?;
        if target >= first.cars.len() {
            return Err(Error::InvalidConfig("target car out of range"));
        }
        let others: Vec<usize> = (0..first.cars.len()).filter(|&i| i != target).collect();
        let history: Vec<_> = ep.steps.iter().map(|s| s.actions.clone()).collect();
        let mut driver = Driver::new(layout, first, target, 0);
        let mut rng = rng_from(0, &[]);
        let mut contexts = Vec::with_capacity(worlds.len());
        let mut lik = Vec::with_capacity(ep.len());
        for (t, world) in worlds.iter().enumerate() {
            let honkers = recent_honkers(&history, t, layout.cfg.honk_attention_steps);
            let prev = t.checked_sub(1).map(|p| history[p].as_slice());
            driver.observe(layout, world, prev, &honkers, None, &mut rng)?;
            contexts.push(driver.context(layout, &honkers));
            if let (Some(acts), Some((me, tracks, h))) = (history.get(t), driver.view()) {
                let l = view_likelihoods(layout, me, tracks, h, acts)
                    .into_iter()
                    .filter_map(|(id, p)| others.iter().position(|&o| o == id as usize).map(|k| (k, p)))
                    .collect();
                lik.push(l);
            }
        }
        Ok(Self {
            target,
            others,
            contexts,
            lik,
            actions: ep.steps.iter().map(|s| s.actions[target].index()).collect(),
        })
    }

    pub fn target(&self) -> usize {
        self.target
    }

    /// Goal of other car `slot` under joint hypothesis `h`.
    pub fn goal_of(h: usize, slot: usize) -> usize {
        (h / 3usize.pow(slot as u32)) % 3
    }

    /// Joint hypothesis of the given goals of the other cars.
    pub fn joint(goals: &[usize]) -> usize {
        goals.iter().rev().fold(0, |acc, &g| acc * 3 + g)
    }
}

impl NestedGoalModel for DrivingModel {
    fn steps(&self) -> usize {
        self.actions.len()
    }

    fn lower_size(&self) -> usize {
        3usize.pow(self.others.len() as u32)
    }

    fn upper_size(&self) -> usize {
        DrivingGoal::ALL.len()
    }

    fn lower_likelihood(&self, tau: usize, h: usize) -> f64 {
        self.lik[tau]
            .iter()
            .map(|&(k, p)| p[Self::goal_of(h, k)])
            .product()
    }

    fn upper_policy(&self, tau: usize, belief: &[(usize, f64)], goal: usize) -> PolicyDistribution {
        let ctx = &self.contexts[tau];
        let mut by_slot = vec![[0.0; 3]; self.others.len()];
        for &(h, w) in belief {
            for (k, m) in by_slot.iter_mut().enumerate() {
                m[Self::goal_of(h, k)] += w;
            }
        }
        let marginals: Vec<[f64; 3]> = ctx
            .tracked
            .iter()
            .map(|&id| {
                self.others
                    .iter()
                    .position(|&o| o == id as usize)
                    .map_or([1.0 / 3.0; 3], |k| by_slot[k])
            })
            .collect();
        ctx.policy(DrivingGoal::from_index(goal), &marginals, 1)
    }

    fn upper_action(&self, tau: usize) -> usize {
        self.actions[tau]
    }
}

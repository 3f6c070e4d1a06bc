use std::path::Path;

use nested_tom_core::construction::{feature_sequence, ConstructionModel, BOB};
use nested_tom_core::driving::{joint_goal_proposal, observer_sequence, DrivingModel, Layout};
use nested_tom_core::inference::NestedGoalModel;
use nested_tom_core::neural::{proposal_sequence, MlpParams};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::data::{load_construction, load_driving, model_path, Env};
use crate::error::Result;
use crate::io::load_model;

/// What a method is scored on at each prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    /// The upper agent's goal (argmax of the posterior's upper marginal).
    Goal,
    /// The upper agent's next action (argmax of the predicted policy).
    Action,
}

/// Learned proposals per prefix length `0..=steps`.
#[derive(Debug, Clone, Default)]
pub struct LearnedProposals {
    pub lower: Vec<Vec<f64>>,
    pub upper: Vec<Vec<f64>>,
}

/// One nested inference problem: a recorded episode seen from the
/// observer, about one upper agent.
pub struct Case {
    pub episode: usize,
    pub agent: usize,
    pub model: Box<dyn NestedGoalModel + Send + Sync>,
    pub target: Target,
    /// Evaluated prefix lengths, in order.
    pub prefixes: Vec<usize>,
    /// Ground truth at each evaluated prefix.
    pub truth: Vec<usize>,
    pub learned: Option<LearnedProposals>,
    /// Baseline output per evaluated prefix.
    pub tomnet: Option<Vec<Vec<f64>>>,
}

impl Case {
    pub fn joint_size(&self) -> usize {
        self.model.lower_size() * self.model.upper_size()
    }
}

/// The networks an evaluation needs.
#[derive(Debug, Default)]
pub struct Nets {
    pub level1: Option<MlpParams>,
    pub level2: Option<MlpParams>,
    pub tomnet: Option<MlpParams>,
}

impl Nets {
    /// Loads the proposal nets when `learned` and the baseline net when
    /// `tomnet`.
    pub fn load(cfg: &ExperimentConfig, out: &Path, env: Env, learned: bool, tomnet: bool) -> Result<Self> {
        let dir = cfg.model_dir(out);
        let get = |net: &str, what: &'static str| load_model(&model_path(&dir, env, net), what);
        let mut nets = Nets::default();
        if learned {
            nets.level1 = Some(get("level1", "level-1 goal proposal")?);
            nets.level2 = Some(get("level2", "level-2 goal proposal")?);
        }
        if tomnet {
            nets.tomnet = Some(match env {
                Env::Construction => get("level2", "level-2 goal network")?,
                Env::Driving => get("tomnet", "action network")?,
            });
        }
        Ok(nets)
    }
}

fn floored(p: &[f64], floor: f64) -> Vec<f64> {
    let k = p.len() as f64;
    p.iter().map(|x| (1.0 - floor) * x + floor / k).collect()
}

/// Cases of a Construction dataset: Bob's goal after every prefix `1..=len`.
pub fn construction_cases(cfg: &ExperimentConfig, out: &Path, kind: &str, nets: &Nets) -> Result<Vec<Case>> {
    let env = &cfg.construction.env;
    let floor = cfg.inference.proposal_floor;
    let eps = load_construction(cfg, out, kind)?;
    eps.par_iter()
        .enumerate()
        .map(|(e, ep)| {
            let model = ConstructionModel::new(env, ep)?;
            let prefixes: Vec<usize> = (1..=model.steps()).collect();
            let goal = ep.agents[BOB].goal as usize;
            let level2 = match (&nets.level2, &nets.tomnet) {
                (None, None) => None,
                _ => Some(feature_sequence(env, ep, 2)?),
            };
            let learned = match (&nets.level1, &nets.level2, &level2) {
                (Some(q1), Some(q2), Some(f2)) => {
                    let f1 = feature_sequence(env, ep, 1)?;
                    Some(LearnedProposals {
                        lower: proposal_sequence(q1, &f1, false, 0.0)?.iter().map(|p| floored(p, floor)).collect(),
                        upper: proposal_sequence(q2, f2, false, 0.0)?.iter().map(|p| floored(p, floor)).collect(),
                    })
                }
                _ => None,
            };
            let tomnet = match (&nets.tomnet, &level2) {
                (Some(net), Some(f2)) => {
                    let all = proposal_sequence(net, f2, false, 0.0)?;
                    Some(prefixes.iter().map(|&n| all[n].clone()).collect())
                }
                _ => None,
            };
            Ok(Case {
                episode: e,
                agent: BOB,
                model: Box::new(model),
                target: Target::Goal,
                truth: vec![goal; prefixes.len()],
                prefixes,
                learned,
                tomnet,
            })
        })
        .collect()
}

/// Cases of a Driving dataset: every car's next action at every step.
pub fn driving_cases(cfg: &ExperimentConfig, out: &Path, kind: &str, nets: &Nets) -> Result<Vec<Case>> {
    let layout = Layout::new(cfg.driving.env.clone());
    let floor = cfg.inference.proposal_floor;
    let eps = load_driving(cfg, out, kind)?;
    let jobs: Vec<(usize, usize)> = eps
        .iter()
        .enumerate()
        .flat_map(|(e, ep)| (0..ep.agents.len()).map(move |c| (e, c)))
        .collect();
    jobs.par_iter()
        .map(|&(e, target)| {
            let ep = &eps[e];
            let model = DrivingModel::new(&layout, ep, target)?;
            let prefixes: Vec<usize> = (0..model.steps()).collect();
            let truth = prefixes.iter().map(|&n| ep.steps[n].actions[target].index()).collect();
            let needs_features = nets.level1.is_some() || nets.tomnet.is_some();
            let f = needs_features.then(|| observer_sequence(&layout, ep, target));
            let n_others = ep.agents.len() - 1;
            let learned = match (&nets.level1, &nets.level2, &f) {
                (Some(q1), Some(q2), Some(f)) => Some(LearnedProposals {
                    lower: proposal_sequence(q1, f, false, 0.0)?
                        .iter()
                        .map(|p| floored(&joint_goal_proposal(p, n_others), floor))
                        .collect(),
                    upper: proposal_sequence(q2, f, false, 0.0)?.iter().map(|p| floored(p, floor)).collect(),
                }),
                _ => None,
            };
            let tomnet = match (&nets.tomnet, &f) {
                (Some(net), Some(f)) => Some(proposal_sequence(net, f, false, 0.0)?),
                _ => None,
            };
            Ok(Case {
                episode: e,
                agent: target,
                model: Box::new(model),
                target: Target::Action,
                prefixes,
                truth,
                learned,
                tomnet,
            })
        })
        .collect()
}

pub fn load_cases(cfg: &ExperimentConfig, out: &Path, env: Env, kind: &str, nets: &Nets) -> Result<Vec<Case>> {
    match env {
        Env::Construction => construction_cases(cfg, out, kind, nets),
        Env::Driving => driving_cases(cfg, out, kind, nets),
    }
}

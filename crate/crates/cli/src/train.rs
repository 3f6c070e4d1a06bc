use std::path::{Path, PathBuf};

use nested_tom_core::construction::{augment_block_permutations, goal_sequences};
use nested_tom_core::driving::{
    action_sequences, other_goal_sequences, state_sequences, target_goal_sequences, Layout, OTHER_GOAL_HEADS, STATE_HEADS,
};
use nested_tom_core::neural::{train_recognition, MlpParams, TrainConfig, TrainingLog, TrainingSequence};
use nested_tom_core::rng::derive_seed;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::data::{load_construction, load_driving, model_path, Env};
use crate::error::{CliError, Result};
use crate::io::{save_model, write_csv};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub epoch: usize,
    pub loss: f64,
    pub heldout_accuracy: Option<f64>,
}

/// Per-epoch loss, with epoch 0 the loss before training.
pub fn curve(log: &TrainingLog) -> Vec<CurveRow> {
    let mut rows = vec![CurveRow {
        epoch: 0,
        loss: log.initial_loss,
        heldout_accuracy: None,
    }];
    rows.extend(log.epoch_loss.iter().enumerate().map(|(i, &loss)| CurveRow {
        epoch: i + 1,
        loss,
        heldout_accuracy: log.heldout_accuracy.get(i).copied(),
    }));
    rows
}

/// A trained network and where it was written.
#[derive(Debug)]
pub struct Trained {
    pub params: MlpParams,
    pub log: TrainingLog,
    pub model: PathBuf,
    pub curve: PathBuf,
}

fn seeded(cfg: &ExperimentConfig, tc: &TrainConfig) -> TrainConfig {
    TrainConfig {
        seed: derive_seed(cfg.seed, &[tc.seed]),
        ..tc.clone()
    }
}

/// Builds sequences episode by episode in parallel, keeping episode order.
fn par_sequences<E: Sync>(
    eps: &[E],
    f: impl Fn(&[E]) -> nested_tom_core::Result<Vec<TrainingSequence>> + Sync,
) -> Result<Vec<TrainingSequence>> {
    let parts = eps
        .par_iter()
        .map(|e| f(std::slice::from_ref(e)))
        .collect::<nested_tom_core::Result<Vec<_>>>()?;
    Ok(parts.into_iter().flatten().collect())
}

/// Training data, heads, settings and optional held-out data of one net.
type Recipe = (Vec<TrainingSequence>, Vec<usize>, TrainConfig, Option<Vec<TrainingSequence>>);

fn recipe(cfg: &ExperimentConfig, out: &Path, env: Env, net: &str) -> Result<Recipe> {
    match (env, net) {
        (Env::Construction, "level1") => {
            let c = &cfg.construction;
            let eps = load_construction(cfg, out, "s1")?;
            let n_held = (eps.len() as f64 * c.heldout_fraction).round() as usize;
            let (train, held) = eps.split_at(eps.len() - n_held);
            let seqs = par_sequences(train, |e| goal_sequences(&c.env, e, 1))?;
            let held = goal_sequences(&c.env, held, 1)?;
            let data = augment_block_permutations(&c.env, &seqs, c.augment_copies, derive_seed(cfg.seed, &[1]));
            let heads = vec![c.env.alice_goals().len()];
            Ok((data, heads, c.level1.clone(), (!held.is_empty()).then_some(held)))
        }
        (Env::Construction, "level2") => {
            let c = &cfg.construction;
            let eps = load_construction(cfg, out, "s2")?;
            let seqs = par_sequences(&eps, |e| goal_sequences(&c.env, e, 2))?;
            Ok((seqs, vec![2], c.level2.clone(), None))
        }
        (Env::Driving, _) => {
            let d = &cfg.driving;
            let layout = Layout::new(d.env.clone());
            let (kind, tc, heads): (&str, &TrainConfig, Vec<usize>) = match net {
                "state" => ("s0", &d.state, STATE_HEADS.to_vec()),
                "level1" => ("s1", &d.level1, OTHER_GOAL_HEADS.to_vec()),
                "level2" => ("s2", &d.level2, vec![3]),
                "tomnet" => ("s2", &d.tomnet, vec![5]),
                _ => return Err(unknown(env, net)),
            };
            let eps = load_driving(cfg, out, kind)?;
            let seqs = par_sequences(&eps, |e| {
                Ok(match net {
                    "state" => state_sequences(&layout, e),
                    "level1" => other_goal_sequences(&layout, e),
                    "level2" => target_goal_sequences(&layout, e),
                    _ => action_sequences(&layout, e),
                })
            })?;
            Ok((seqs, heads, tc.clone(), None))
        }
        _ => Err(unknown(env, net)),
    }
}

fn unknown(env: Env, net: &str) -> CliError {
    CliError::Usage(format!("unknown {} network `{net}` (expected one of {:?})", env.tag(), env.nets()))
}

/// Trains `net` of `env` from the datasets under `out` and writes its
/// checkpoint and training curve.
pub fn train_net(cfg: &ExperimentConfig, out: &Path, env: Env, net: &str) -> Result<Trained> {
    let (data, heads, tc, held) = recipe(cfg, out, env, net)?;
    let (params, log) = train_recognition(&data, &heads, &seeded(cfg, &tc), held.as_deref())?;
    let model = model_path(&cfg.model_dir(out), env, net);
    save_model(&model, &params)?;
    let curve_path = out.join("train").join(format!("{}-{net}.csv", env.tag()));
    write_csv(&curve_path, &curve(&log))?;
    Ok(Trained {
        params,
        log,
        model,
        curve: curve_path,
    })
}

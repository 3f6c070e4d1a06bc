use alloc::vec::Vec;
use rand::seq::SliceRandom;

use super::features::{featurize, permute_blocks, permute_goal};
use super::synth::{episode_states, ConstructionEpisode};
use super::{ConstructionConfig, ALICE, BOB};
use crate::neural::{FeatureVector, TrainingSequence};
use crate::rng::rng_from;
use crate::Result;

/// Features of every prefix `0..=len` of `ep` at `target_level`.
pub fn feature_sequence(cfg: &ConstructionConfig, ep: &ConstructionEpisode, target_level: usize) -> Result<Vec<FeatureVector>> {
    let states = episode_states(cfg, ep)?;
    Ok((0..=ep.len()).map(|n| featurize(cfg, ep, &states, n, target_level)).collect())
}

/// One sequence per episode labeled with Alice's goal (level 1) or Bob's
/// (level 2).
pub fn goal_sequences(cfg: &ConstructionConfig, eps: &[ConstructionEpisode], level: usize) -> Result<Vec<TrainingSequence>> {
    let who = if level >= 2 { BOB } else { ALICE };
    eps.iter()
        .map(|ep| {
            let f = feature_sequence(cfg, ep, level)?;
            Ok(TrainingSequence::constant_target(f, ep.agents[who].goal as usize))
        })
        .collect()
}

/// Appends `copies` relabelings of every level-1 sequence under random
/// block permutations.
pub fn augment_block_permutations(
    cfg: &ConstructionConfig,
    data: &[TrainingSequence],
    copies: usize,
    seed: u64,
) -> Vec<TrainingSequence> {
    let mut rng = rng_from(seed, &[]);
    let mut out = data.to_vec();
    let mut perm: Vec<usize> = (0..cfg.n_blocks).collect();
    for _ in 0..copies {
        for s in data {
            perm.shuffle(&mut rng);
            out.push(TrainingSequence {
                features: s.features.iter().map(|f| permute_blocks(cfg, f, &perm)).collect(),
                targets: s
                    .targets
                    .iter()
                    .map(|t| t.iter().map(|&g| permute_goal(cfg, g, &perm)).collect())
                    .collect(),
            });
        }
    }
    out
}

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use nested_tom_core::construction::{synthesize_from_seed, ConstructionEpisode, EpisodeKind};
use nested_tom_core::driving::{synthesize_driving_from_seed, DrivingEpisode, DrivingKind, Layout};
use nested_tom_core::neural::MlpParams;
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::io::{load_model, read_jsonl};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Env {
    Construction,
    Driving,
}

impl Env {
    pub fn tag(self) -> &'static str {
        match self {
            Env::Construction => "construction",
            Env::Driving => "driving",
        }
    }

    /// Dataset kinds in generation order.
    pub fn kinds(self) -> &'static [&'static str] {
        match self {
            Env::Construction => &["s1", "s2", "test"],
            Env::Driving => &["s0", "s1", "s2", "test", "gen4", "inattentive"],
        }
    }

    /// Kinds evaluated by default.
    pub fn test_kinds(self) -> &'static [&'static str] {
        match self {
            Env::Construction => &["test"],
            Env::Driving => &["test", "gen4", "inattentive"],
        }
    }

    /// Networks in training order.
    pub fn nets(self) -> &'static [&'static str] {
        match self {
            Env::Construction => &["level1", "level2"],
            Env::Driving => &["state", "level1", "level2", "tomnet"],
        }
    }
}

pub fn construction_kind(tag: &str) -> Result<EpisodeKind> {
    [EpisodeKind::S1, EpisodeKind::S2, EpisodeKind::Test]
        .into_iter()
        .find(|k| k.tag() == tag)
        .ok_or_else(|| CliError::Usage(format!("unknown construction kind `{tag}`")))
}

pub fn driving_kind(tag: &str) -> Result<DrivingKind> {
    [
        DrivingKind::S0,
        DrivingKind::S1,
        DrivingKind::S2,
        DrivingKind::Test,
        DrivingKind::Gen4Car,
        DrivingKind::GenInattentive,
    ]
    .into_iter()
    .find(|k| k.tag() == tag)
    .ok_or_else(|| CliError::Usage(format!("unknown driving kind `{tag}`")))
}

pub fn dataset_path(data_dir: &Path, env: Env, kind: &str) -> PathBuf {
    data_dir.join(format!("{}-{kind}.jsonl", env.tag()))
}

pub fn model_path(model_dir: &Path, env: Env, net: &str) -> PathBuf {
    model_dir.join(format!("{}-{net}.json", env.tag()))
}

/// Default episode count of a kind.
pub fn default_count(cfg: &ExperimentConfig, env: Env, kind: &str) -> usize {
    let test = matches!(kind, "test" | "gen4" | "inattentive");
    match (env, test) {
        (Env::Construction, true) => cfg.construction.test_count,
        (Env::Construction, false) => cfg.construction.train_count,
        (Env::Driving, true) => cfg.driving.test_count,
        (Env::Driving, false) => cfg.driving.train_count,
    }
}

pub fn generate_construction(cfg: &ExperimentConfig, kind: &str, count: usize, seed: u64) -> Result<Vec<ConstructionEpisode>> {
    let kind = construction_kind(kind)?;
    let env = &cfg.construction.env;
    (0..count)
        .into_par_iter()
        .map(|k| synthesize_from_seed(env, kind, kind.episode_seed(seed, k)).map_err(CliError::from))
        .collect()
}

pub fn generate_driving(
    cfg: &ExperimentConfig,
    kind: &str,
    count: usize,
    seed: u64,
    state_model: Option<&MlpParams>,
) -> Result<Vec<DrivingEpisode>> {
    let kind = driving_kind(kind)?;
    let layout = Layout::new(cfg.driving.env.clone());
    if kind.amortized() && state_model.is_none() {
        return Err(nested_tom_core::Error::MissingModel("level-0 state proposal").into());
    }
    (0..count)
        .into_par_iter()
        .map(|k| synthesize_driving_from_seed(&layout, kind, kind.episode_seed(seed, k), state_model).map_err(CliError::from))
        .collect()
}

/// The trained level-0 state proposal, when `kind` needs one.
pub fn state_model_for(cfg: &ExperimentConfig, out: &Path, kind: &str) -> Result<Option<MlpParams>> {
    if driving_kind(kind)?.amortized() {
        let path = model_path(&cfg.model_dir(out), Env::Driving, "state");
        Ok(Some(load_model(&path, "level-0 state proposal")?))
    } else {
        Ok(None)
    }
}

pub fn load_construction(cfg: &ExperimentConfig, out: &Path, kind: &str) -> Result<Vec<ConstructionEpisode>> {
    construction_kind(kind)?;
    read_jsonl(&dataset_path(&cfg.data_dir(out), Env::Construction, kind))
}

pub fn load_driving(cfg: &ExperimentConfig, out: &Path, kind: &str) -> Result<Vec<DrivingEpisode>> {
    driving_kind(kind)?;
    read_jsonl(&dataset_path(&cfg.data_dir(out), Env::Driving, kind))
}

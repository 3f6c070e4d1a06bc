use std::path::{Path, PathBuf};

use nested_tom_core::construction::ConstructionConfig;
use nested_tom_core::driving::DrivingConfig;
use nested_tom_core::neural::TrainConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// Dataset sizes and network settings for the Construction domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConstructionSection {
    pub env: ConstructionConfig,
    pub train_count: usize,
    pub test_count: usize,
    /// Held-out share of S1 used to report the level-1 net's accuracy.
    pub heldout_fraction: f64,
    /// Extra block-relabeled copies of every level-1 training sequence.
    pub augment_copies: usize,
    pub level1: TrainConfig,
    pub level2: TrainConfig,
    /// Particle budgets as fractions of the joint hypothesis space.
    pub fractions: Vec<f64>,
    /// Budget of the sampling methods in the progress curves.
    pub progress_fraction: f64,
}

impl Default for ConstructionSection {
    fn default() -> Self {
        Self {
            env: ConstructionConfig::default(),
            train_count: 1000,
            test_count: 100,
            heldout_fraction: 0.1,
            augment_copies: 9,
            level1: TrainConfig {
                epochs: 4,
                recurrent: false,
                ..TrainConfig::default()
            },
            level2: TrainConfig {
                epochs: 10,
                recurrent: false,
                ..TrainConfig::default()
            },
            fractions: vec![0.02, 0.067, 0.11, 0.25, 0.5, 1.0],
            progress_fraction: 0.11,
        }
    }
}

/// Dataset sizes and network settings for the Driving domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DrivingSection {
    pub env: DrivingConfig,
    pub train_count: usize,
    pub test_count: usize,
    pub state: TrainConfig,
    pub level1: TrainConfig,
    pub level2: TrainConfig,
    pub tomnet: TrainConfig,
    pub fractions: Vec<f64>,
    pub progress_fraction: f64,
}

impl Default for DrivingSection {
    fn default() -> Self {
        let net = TrainConfig {
            epochs: 5,
            recurrent: false,
            ..TrainConfig::default()
        };
        Self {
            env: DrivingConfig::default(),
            train_count: 300,
            test_count: 100,
            state: net.clone(),
            level1: net.clone(),
            level2: net.clone(),
            tomnet: net,
            fractions: vec![0.125, 0.15, 0.25, 0.5, 1.0],
            progress_fraction: 0.125,
        }
    }
}

/// How proposals are turned into particle sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InferenceSettings {
    /// Particles for the upper agent's nested belief at small budgets.
    pub n_nested: usize,
    /// Uniform mass mixed into learned proposals.
    pub proposal_floor: f64,
    /// Smoothing applied to the approximate posterior before KL.
    pub kl_floor: f64,
    pub stratified: bool,
    pub progress_buckets: usize,
}

impl Default for InferenceSettings {
    fn default() -> Self {
        Self {
            n_nested: 3,
            proposal_floor: 0.01,
            kl_floor: 1e-10,
            stratified: true,
            progress_buckets: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
#[derive(Default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub inference: InferenceSettings,
    pub construction: ConstructionSection,
    pub driving: DrivingSection,
    /// Overrides `<out>/data` and `<out>/models`.
    pub data_dir: Option<PathBuf>,
    pub model_dir: Option<PathBuf>,
}


impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let cfg: Self = serde_json::from_str(&text).map_err(|source| CliError::Parse {
            path: path.to_path_buf(),
            line: source.line(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.construction;
        let d = &self.driving;
        for &f in c.fractions.iter().chain(&d.fractions).chain([&c.progress_fraction, &d.progress_fraction]) {
            check_fraction(f)?;
        }
        if !(0.0..1.0).contains(&self.construction.heldout_fraction) {
            return Err(CliError::Usage("heldout_fraction must lie in [0, 1)".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON encoding, hex.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn data_dir(&self, out: &Path) -> PathBuf {
        self.data_dir.clone().unwrap_or_else(|| out.join("data"))
    }

    pub fn model_dir(&self, out: &Path) -> PathBuf {
        self.model_dir.clone().unwrap_or_else(|| out.join("models"))
    }
}

pub fn check_fraction(f: f64) -> Result<()> {
    if f > 0.0 && f <= 1.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!("particle fraction {f} outside (0, 1]")))
    }
}

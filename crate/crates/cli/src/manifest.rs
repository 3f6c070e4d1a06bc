use std::path::{Path, PathBuf};

use nested_tom_core::neural::FORMAT_VERSION;
use nested_tom_core::ipomdp::EPISODE_SCHEMA;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::io::write_json;

#[derive(Debug, Serialize)]
pub struct Versions {
    pub nested_tom: &'static str,
    pub episode_schema: &'static str,
    pub checkpoint_format: u32,
}

/// Record of one CLI run; `config_hash` joins it to the CSVs it wrote.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub env: String,
    pub kind: Option<String>,
    pub seed: u64,
    pub config_hash: String,
    pub versions: Versions,
    pub outputs: Vec<PathBuf>,
    pub config: ExperimentConfig,
}

impl Manifest {
    pub fn new(command: &str, env: &str, kind: Option<&str>, cfg: &ExperimentConfig) -> Self {
        Self {
            command: command.to_string(),
            env: env.to_string(),
            kind: kind.map(str::to_string),
            seed: cfg.seed,
            config_hash: cfg.hash(),
            versions: Versions {
                nested_tom: env!("CARGO_PKG_VERSION"),
                episode_schema: EPISODE_SCHEMA,
                checkpoint_format: FORMAT_VERSION,
            },
            outputs: Vec::new(),
            config: cfg.clone(),
        }
    }

    /// Writes `<out>/manifests/<command>-<env>[-<kind>].json`.
    pub fn write(&self, out: &Path) -> Result<PathBuf> {
        let mut name = format!("{}-{}", self.command, self.env);
        if let Some(k) = &self.kind {
            name.push('-');
            name.push_str(k);
        }
        let path = out.join("manifests").join(name + ".json");
        write_json(&path, self)?;
        Ok(path)
    }
}

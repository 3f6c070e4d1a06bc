use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{check_fraction, ExperimentConfig};
use crate::data::{dataset_path, default_count, generate_construction, generate_driving, state_model_for, Env};
use crate::error::Result;
use crate::eval::{evaluate, Method};
use crate::infer::{infer, InferRequest};
use crate::io::write_jsonl;
use crate::manifest::Manifest;
use crate::report::report;
use crate::train::train_net;

#[derive(Debug, Parser)]
#[command(name = "nested-tom", version, about = "Nested goal inference experiments: data, training, inference, evaluation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: GlobalArgs,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Output directory for data, models, tables and manifests.
    #[arg(long, global = true, default_value = "runs")]
    pub out: PathBuf,
    /// JSON experiment configuration; defaults apply to missing fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured global seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize episode datasets as JSONL.
    GenData {
        #[arg(long, value_enum)]
        env: Env,
        /// Dataset kinds; all kinds of the domain when omitted.
        #[arg(long)]
        kind: Vec<String>,
        /// Episodes per kind; the configured size when omitted.
        #[arg(long)]
        count: Option<usize>,
    },
    /// Train recognition networks and write checkpoints and loss curves.
    Train {
        #[arg(long, value_enum)]
        env: Env,
        /// Networks to train; all of the domain's when omitted.
        #[arg(long)]
        net: Vec<String>,
    },
    /// Dump the posterior after every step of one episode.
    Infer {
        #[arg(long, value_enum)]
        env: Env,
        #[arg(long, default_value = "test")]
        kind: String,
        #[arg(long, default_value_t = 0)]
        episode: usize,
        /// Upper agent to infer about (Driving car index).
        #[arg(long)]
        target: Option<usize>,
        #[arg(long, value_enum, default_value = "ours")]
        method: Method,
        /// Particle budget as a fraction of the joint space.
        #[arg(long, default_value_t = 1.0)]
        fraction: f64,
    },
    /// Evaluate accuracy, KL and progress curves on test datasets.
    Eval {
        #[arg(long, value_enum)]
        env: Env,
        /// Datasets to evaluate; the domain's test kinds when omitted.
        #[arg(long)]
        kind: Vec<String>,
        /// Methods to evaluate; all when omitted.
        #[arg(long, value_enum)]
        method: Vec<Method>,
        /// Comma-separated particle budgets; the configured grid when omitted.
        #[arg(long, value_delimiter = ',')]
        fractions: Vec<f64>,
    },
    /// Pivot every evaluation table into per-figure tables.
    Report,
}

fn load_config(g: &GlobalArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &g.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn finish(mut manifest: Manifest, out: &Path, outputs: Vec<PathBuf>) -> Result<Vec<PathBuf>> {
    manifest.outputs = outputs.clone();
    let m = manifest.write(out)?;
    Ok(outputs.into_iter().chain([m]).collect())
}

fn or_all(given: &[String], all: &[&str]) -> Vec<String> {
    if given.is_empty() {
        all.iter().map(|s| s.to_string()).collect()
    } else {
        given.to_vec()
    }
}

/// Runs one command and returns every file it wrote, manifests last.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    let mut cfg = load_config(&cli.global)?;
    let out = cli.global.out.as_path();
    let mut written = Vec::new();
    match &cli.command {
        Command::GenData { env, kind, count } => {
            for kind in or_all(kind, env.kinds()) {
                let n = count.unwrap_or_else(|| default_count(&cfg, *env, &kind));
                let path = dataset_path(&cfg.data_dir(out), *env, &kind);
                match env {
                    Env::Construction => write_jsonl(&path, &generate_construction(&cfg, &kind, n, cfg.seed)?)?,
                    Env::Driving => {
                        let state = state_model_for(&cfg, out, &kind)?;
                        write_jsonl(&path, &generate_driving(&cfg, &kind, n, cfg.seed, state.as_ref())?)?
                    }
                }
                let m = Manifest::new("gen-data", env.tag(), Some(&kind), &cfg);
                written.extend(finish(m, out, vec![path])?);
            }
        }
        Command::Train { env, net } => {
            for net in or_all(net, env.nets()) {
                let t = train_net(&cfg, out, *env, &net)?;
                let m = Manifest::new("train", env.tag(), Some(&net), &cfg);
                written.extend(finish(m, out, vec![t.model, t.curve])?);
            }
        }
        Command::Infer {
            env,
            kind,
            episode,
            target,
            method,
            fraction,
        } => {
            check_fraction(*fraction)?;
            let req = InferRequest {
                env: *env,
                kind,
                episode: *episode,
                agent: *target,
                method: *method,
                fraction: *fraction,
            };
            let (path, _) = infer(&cfg, out, &req)?;
            let m = Manifest::new("infer", env.tag(), Some(kind), &cfg);
            written.extend(finish(m, out, vec![path])?);
        }
        Command::Eval {
            env,
            kind,
            method,
            fractions,
        } => {
            if !fractions.is_empty() {
                match env {
                    Env::Construction => cfg.construction.fractions = fractions.clone(),
                    Env::Driving => cfg.driving.fractions = fractions.clone(),
                }
                cfg.validate()?;
            }
            let grid = match env {
                Env::Construction => cfg.construction.fractions.clone(),
                Env::Driving => cfg.driving.fractions.clone(),
            };
            let methods = if method.is_empty() { Method::ALL.to_vec() } else { method.clone() };
            for kind in or_all(kind, env.test_kinds()) {
                let e = evaluate(&cfg, out, *env, &kind, &methods, &grid)?;
                let m = Manifest::new("eval", env.tag(), Some(&kind), &cfg);
                written.extend(finish(m, out, [vec![e.table], e.progress].concat())?);
            }
        }
        Command::Report => {
            let files = report(out)?;
            written.extend(finish(Manifest::new("report", "all", None, &cfg), out, files)?);
        }
    }
    Ok(written)
}

use std::path::{Path, PathBuf};

use nested_tom_core::inference::exact_posterior;
use serde::Serialize;

use crate::cases::{load_cases, Nets};
use crate::config::ExperimentConfig;
use crate::data::Env;
use crate::error::{CliError, Result};
use crate::eval::{Evaluator, Method, LEVEL};
use crate::io::write_csv;

/// Posterior mass on one hypothesis after `t` observed steps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosteriorRow {
    pub episode: usize,
    pub t: usize,
    pub hypothesis_id: usize,
    pub prob: f64,
    pub weight_raw: f64,
}

/// Which posterior to dump.
#[derive(Debug, Clone, Copy)]
pub struct InferRequest<'a> {
    pub env: Env,
    pub kind: &'a str,
    pub episode: usize,
    /// Upper agent (Driving car index; Construction always infers Bob).
    pub agent: Option<usize>,
    pub method: Method,
    pub fraction: f64,
}

/// Posterior after every prefix of one episode. The baseline's rows are
/// its output distribution (over goals or actions) with the weight equal
/// to the probability.
pub fn infer(cfg: &ExperimentConfig, out: &Path, req: &InferRequest) -> Result<(PathBuf, Vec<PosteriorRow>)> {
    let nets = Nets::load(cfg, out, req.env, req.method == Method::Ours, req.method == Method::Tomnet)?;
    let cases = load_cases(cfg, out, req.env, req.kind, &nets)?;
    let agent = req.agent.unwrap_or(match req.env {
        Env::Construction => nested_tom_core::construction::BOB,
        Env::Driving => 0,
    });
    let case = cases
        .iter()
        .find(|c| c.episode == req.episode && c.agent == agent)
        .ok_or_else(|| CliError::Usage(format!("no episode {} with upper agent {agent} in `{}`", req.episode, req.kind)))?;
    let evaluator = Evaluator { cfg, runs: Vec::new() };
    let mut rows = Vec::new();
    for (i, &t) in case.prefixes.iter().enumerate() {
        let (probs, weights) = match req.method {
            Method::Tomnet => {
                let p = case.tomnet.as_ref().map(|o| o[i].clone()).unwrap_or_default();
                (p.clone(), p)
            }
            Method::Exact => {
                let inf = exact_posterior(case.model.as_ref(), LEVEL, t)?;
                (inf.posterior.probs().to_vec(), inf.raw_weights)
            }
            m => {
                let inf = evaluator.sample(case, i, m, req.fraction)?;
                (inf.posterior.probs().to_vec(), inf.raw_weights)
            }
        };
        rows.extend(probs.iter().zip(&weights).enumerate().map(|(h, (&prob, &weight_raw))| PosteriorRow {
            episode: req.episode,
            t,
            hypothesis_id: h,
            prob,
            weight_raw,
        }));
    }
    let name = format!(
        "{}-{}-ep{}-agent{agent}-{}.csv",
        req.env.tag(),
        req.kind,
        req.episode,
        req.method.tag()
    );
    let path = out.join("infer").join(name);
    write_csv(&path, &rows)?;
    Ok((path, rows))
}

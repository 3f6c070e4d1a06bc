use std::path::{Path, PathBuf};

use clap::ValueEnum;
use nested_tom_core::inference::{exact_posterior, importance_sample, predict_action, Inference, Proposals, SamplerConfig};
use nested_tom_core::ipomdp::kl_divergence_with_floor;
use nested_tom_core::math::argmax;
use nested_tom_core::rng::rng_from;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cases::{load_cases, Case, Nets, Target};
use crate::config::ExperimentConfig;
use crate::data::Env;
use crate::error::Result;
use crate::io::write_csv;

/// Observer level of every evaluated posterior.
pub const LEVEL: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Ours,
    #[value(name = "ours_no_nn")]
    OursNoNn,
    Tomnet,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Exact, Method::Ours, Method::OursNoNn, Method::Tomnet];

    pub fn tag(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Ours => "ours",
            Method::OursNoNn => "ours_no_nn",
            Method::Tomnet => "tomnet",
        }
    }

    fn samples(self) -> bool {
        matches!(self, Method::Ours | Method::OursNoNn)
    }
}

/// Particle counts of one sampling call.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub n_upper: usize,
    pub n_lower: usize,
    pub n_nested: usize,
}

impl Budget {
    pub fn particles(&self) -> usize {
        self.n_upper * self.n_lower
    }
}

/// Splits `fraction` of the `upper x lower` joint space into upper and
/// lower draws: every upper goal first (the upper space is small and its
/// marginal is what gets scored), then as many lower draws per upper draw
/// as the budget allows. The nested belief gets at least `min_nested`
/// particles, and the whole lower space at fraction 1.
pub fn budget(upper: usize, lower: usize, fraction: f64, min_nested: usize) -> Budget {
    let total = ((fraction * (upper * lower) as f64).round() as usize).max(1);
    let n_upper = total.min(upper);
    let n_lower = (total / n_upper).clamp(1, lower);
    let n_nested = ((fraction * lower as f64).round() as usize).max(min_nested).min(lower);
    Budget {
        n_upper,
        n_lower,
        n_nested,
    }
}

/// One method at one budget; the budget is ignored by non-sampling methods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Run {
    pub method: Method,
    pub fraction: f64,
}

/// What a method produced on one prefix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub correct: bool,
    pub kl: Option<f64>,
    pub compute: u64,
}

/// All outcomes on one prefix, `runs` in the order requested.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub bucket: usize,
    pub exact: Outcome,
    pub runs: Vec<Outcome>,
}

pub struct Evaluator<'a> {
    pub cfg: &'a ExperimentConfig,
    pub runs: Vec<Run>,
}

impl Evaluator<'_> {
    fn score(&self, case: &Case, i: usize, inf: &Inference) -> bool {
        let n = case.prefixes[i];
        let guess = match case.target {
            Target::Goal => argmax(&inf.posterior.upper_marginal()),
            Target::Action => predict_action(case.model.as_ref(), n, inf).argmax(),
        };
        guess == case.truth[i]
    }

    /// Posterior of a sampling method at prefix index `i`.
    pub fn sample(&self, case: &Case, i: usize, method: Method, fraction: f64) -> Result<Inference> {
        let m = case.model.as_ref();
        let n = case.prefixes[i];
        let inf = &self.cfg.inference;
        let b = budget(m.upper_size(), m.lower_size(), fraction, inf.n_nested);
        let proposals = match (method, &case.learned) {
            (Method::Ours, Some(q)) => Proposals {
                lower: q.lower[n].clone(),
                upper: q.upper[n].clone(),
                nested: q.lower[..=n].to_vec(),
            },
            (Method::Ours, None) => return Err(nested_tom_core::Error::MissingModel("goal proposal").into()),
            _ => Proposals::uniform(m.lower_size(), m.upper_size()),
        };
        let sc = SamplerConfig {
            n_lower: b.n_lower,
            n_upper: b.n_upper,
            n_nested: b.n_nested,
            stratified: inf.stratified,
        };
        let path = [
            case.episode as u64,
            case.agent as u64,
            n as u64,
            method as u64,
            fraction.to_bits(),
        ];
        Ok(importance_sample(m, LEVEL, n, &proposals, &sc, &mut rng_from(self.cfg.seed, &path))?)
    }

    /// Outcomes of every run on every prefix of `case`.
    pub fn case(&self, case: &Case) -> Result<Vec<StepRecord>> {
        let buckets = self.cfg.inference.progress_buckets;
        let len = case.prefixes.len();
        (0..len)
            .map(|i| {
                let exact = exact_posterior(case.model.as_ref(), LEVEL, case.prefixes[i])?;
                let exact_outcome = Outcome {
                    correct: self.score(case, i, &exact),
                    kl: Some(0.0),
                    compute: exact.compute.total(),
                };
                let runs = self
                    .runs
                    .iter()
                    .map(|r| match r.method {
                        Method::Exact => Ok(exact_outcome),
                        Method::Tomnet => {
                            let out = case.tomnet.as_ref().ok_or(nested_tom_core::Error::MissingModel("baseline network"))?;
                            Ok(Outcome {
                                correct: argmax(&out[i]) == case.truth[i],
                                kl: None,
                                compute: 0,
                            })
                        }
                        m => {
                            let inf = self.sample(case, i, m, r.fraction)?;
                            Ok(Outcome {
                                correct: self.score(case, i, &inf),
                                kl: Some(kl_divergence_with_floor(&exact.posterior, &inf.posterior, self.cfg.inference.kl_floor)?),
                                compute: inf.compute.total(),
                            })
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(StepRecord {
                    bucket: (i * buckets / len).min(buckets - 1),
                    exact: exact_outcome,
                    runs,
                })
            })
            .collect()
    }

    /// Per-case records, computed in parallel and returned in case order.
    pub fn all(&self, cases: &[Case]) -> Result<Vec<Vec<StepRecord>>> {
        cases.par_iter().map(|c| self.case(c)).collect()
    }
}

/// One row of an evaluation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub method: Method,
    pub particle_fraction: f64,
    pub particles: usize,
    pub metric: String,
    pub value: f64,
    pub stderr: f64,
    pub n_episodes: usize,
    pub n_steps: usize,
    pub policy_evals: u64,
    pub compute_ratio: f64,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressRow {
    pub bucket: usize,
    pub accuracy: f64,
    pub stderr: f64,
    pub count: usize,
}

/// Mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Pools accuracy and KL over every step of every case.
pub fn summarize(cfg: &ExperimentConfig, cases: &[Case], records: &[Vec<StepRecord>], runs: &[Run]) -> Vec<EvalRow> {
    let steps: Vec<&StepRecord> = records.iter().flatten().collect();
    let n_episodes = {
        let mut eps: Vec<usize> = cases.iter().map(|c| c.episode).collect();
        eps.dedup();
        eps.len()
    };
    let largest = cases.iter().max_by_key(|c| c.joint_size());
    let exact_evals: u64 = steps.iter().map(|s| s.exact.compute).sum();
    let hash = cfg.hash();
    let mut rows = Vec::new();
    for (k, run) in runs.iter().enumerate() {
        let outcomes: Vec<Outcome> = steps.iter().map(|s| s.runs[k]).collect();
        let evals: u64 = outcomes.iter().map(|o| o.compute).sum();
        let (fraction, particles) = match (run.method, largest) {
            (Method::Exact, Some(c)) => (1.0, c.joint_size()),
            (Method::Tomnet, _) => (run.fraction, 0),
            (_, Some(c)) => {
                let m = c.model.as_ref();
                (run.fraction, budget(m.upper_size(), m.lower_size(), run.fraction, 1).particles())
            }
            (_, None) => (run.fraction, 0),
        };
        let row = |metric: &str, xs: &[f64]| {
            let (value, stderr) = mean_stderr(xs);
            EvalRow {
                method: run.method,
                particle_fraction: fraction,
                particles,
                metric: metric.to_string(),
                value,
                stderr,
                n_episodes,
                n_steps: xs.len(),
                policy_evals: evals,
                compute_ratio: if exact_evals > 0 { evals as f64 / exact_evals as f64 } else { 0.0 },
                config_hash: hash.clone(),
            }
        };
        let acc: Vec<f64> = outcomes.iter().map(|o| indicator(o.correct)).collect();
        rows.push(row("accuracy", &acc));
        let kl: Vec<f64> = outcomes.iter().filter_map(|o| o.kl).collect();
        if run.method.samples() {
            rows.push(row("kl", &kl));
        }
    }
    rows
}

/// Accuracy per progress bucket of run `k`.
pub fn progress(cfg: &ExperimentConfig, records: &[Vec<StepRecord>], k: usize) -> Vec<ProgressRow> {
    let n = cfg.inference.progress_buckets;
    let mut hits: Vec<Vec<f64>> = vec![Vec::new(); n];
    for s in records.iter().flatten() {
        hits[s.bucket].push(indicator(s.runs[k].correct));
    }
    hits.iter()
        .enumerate()
        .map(|(bucket, xs)| {
            let (accuracy, stderr) = mean_stderr(xs);
            ProgressRow {
                bucket,
                accuracy,
                stderr,
                count: xs.len(),
            }
        })
        .collect()
}

/// The runs of an evaluation: exact once, sampling methods at every
/// fraction, the baseline once per fraction (it has no budget) but
/// computed once.
pub fn plan(methods: &[Method], fractions: &[f64]) -> Vec<Run> {
    let mut runs = Vec::new();
    for &method in methods {
        match method {
            Method::Exact => runs.push(Run { method, fraction: 1.0 }),
            Method::Tomnet => runs.push(Run { method, fraction: 1.0 }),
            _ => runs.extend(fractions.iter().map(|&fraction| Run { method, fraction })),
        }
    }
    runs
}

/// Where one evaluation wrote its tables.
#[derive(Debug, Clone)]
pub struct EvalOutput {
    pub table: PathBuf,
    pub progress: Vec<PathBuf>,
    pub rows: Vec<EvalRow>,
}

pub fn eval_dir(out: &Path) -> PathBuf {
    out.join("eval")
}

/// Evaluates `methods` on dataset `kind` of `env` and writes
/// `<out>/eval/<env>-<kind>.csv` plus one progress curve per method.
pub fn evaluate(cfg: &ExperimentConfig, out: &Path, env: Env, kind: &str, methods: &[Method], fractions: &[f64]) -> Result<EvalOutput> {
    let mut methods = methods.to_vec();
    methods.sort();
    methods.dedup();
    let nets = Nets::load(cfg, out, env, methods.contains(&Method::Ours), methods.contains(&Method::Tomnet))?;
    let cases = load_cases(cfg, out, env, kind, &nets)?;
    let progress_fraction = match env {
        Env::Construction => cfg.construction.progress_fraction,
        Env::Driving => cfg.driving.progress_fraction,
    };
    let mut all_fractions = fractions.to_vec();
    if !all_fractions.contains(&progress_fraction) {
        all_fractions.push(progress_fraction);
    }
    let runs = plan(&methods, &all_fractions);
    let evaluator = Evaluator { cfg, runs: runs.clone() };
    let records = evaluator.all(&cases)?;

    let mut rows = Vec::new();
    for row in summarize(cfg, &cases, &records, &runs) {
        match row.method {
            Method::Tomnet => rows.extend(fractions.iter().map(|&f| EvalRow {
                particle_fraction: f,
                ..row.clone()
            })),
            Method::Exact => rows.push(row),
            _ if fractions.contains(&row.particle_fraction) => rows.push(row),
            _ => {}
        }
    }
    let dir = eval_dir(out);
    let stem = format!("{}-{kind}", env.tag());
    let table = dir.join(format!("{stem}.csv"));
    write_csv(&table, &rows)?;

    let mut curves = Vec::new();
    for (k, run) in runs.iter().enumerate() {
        if run.method.samples() && run.fraction != progress_fraction {
            continue;
        }
        let path = dir.join(format!("{stem}-progress-{}.csv", run.method.tag()));
        write_csv(&path, &progress(cfg, &records, k))?;
        curves.push(path);
    }
    Ok(EvalOutput {
        table,
        progress: curves,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budgets_factor_the_joint_space() {
        let b = |u, l, f| {
            let b = budget(u, l, f, 3);
            (b.n_upper, b.n_lower)
        };
        assert_eq!(b(2, 45, 0.02), (2, 1));
        assert_eq!(b(2, 45, 0.067), (2, 3));
        assert_eq!(b(2, 45, 0.11), (2, 5));
        assert_eq!(b(2, 45, 0.25), (2, 11));
        assert_eq!(b(2, 45, 1.0), (2, 45));
        assert_eq!(b(3, 9, 0.125), (3, 1));
        assert_eq!(b(3, 9, 0.15), (3, 1));
        assert_eq!(b(3, 9, 0.25), (3, 2));
        assert_eq!(b(3, 9, 1.0), (3, 9));
        assert_eq!(budget(2, 45, 1.0, 3).n_nested, 45);
        assert_eq!(budget(2, 45, 0.02, 3).n_nested, 3);
    }

    #[test]
    fn stderr_of_constant_is_zero() {
        assert_eq!(mean_stderr(&[1.0, 1.0, 1.0]), (1.0, 0.0));
        assert_eq!(mean_stderr(&[]), (0.0, 0.0));
    }
}

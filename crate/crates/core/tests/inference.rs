use nested_tom_core::construction::*;
use nested_tom_core::inference::*;
use nested_tom_core::ipomdp::{boltzmann_policy, PolicyDistribution};
use nested_tom_core::rng::rng_from;
use nested_tom_core::Error;
use rand::Rng;

/// Random likelihood tables: 4 lower hypotheses, 2 upper goals, 3 actions.
struct Table {
    lower: Vec<[f64; 4]>,
    upper: Vec<[[[f64; 3]; 2]; 4]>,
    actions: Vec<usize>,
}

impl Table {
    fn new(seed: u64, steps: usize) -> Self {
        let mut rng = rng_from(seed, &[]);
        let mut v = || rng.gen_range(0.05..1.0);
        let lower = (0..steps).map(|_| [v(), v(), v(), v()]).collect();
        let upper = (0..=steps)
            .map(|_| {
                let mut t = [[[0.0; 3]; 2]; 4];
                for row in t.iter_mut().flatten().flatten() {
                    *row = 3.0 * v();
                }
                t
            })
            .collect();
        let actions = (0..=steps).map(|k| (k * 7 + seed as usize) % 3).collect();
        Self { lower, upper, actions }
    }
}

impl NestedGoalModel for Table {
    fn steps(&self) -> usize {
        self.lower.len()
    }

    fn lower_size(&self) -> usize {
        4
    }

    fn upper_size(&self) -> usize {
        2
    }

    fn lower_likelihood(&self, tau: usize, h: usize) -> f64 {
        self.lower[tau][h]
    }

    fn upper_policy(&self, tau: usize, belief: &[(usize, f64)], goal: usize) -> PolicyDistribution {
        let mut values = [0.0; 3];
        for &(h, w) in belief {
            for (v, t) in values.iter_mut().zip(&self.upper[tau][h][goal]) {
                *v += w * t;
            }
        }
        boltzmann_policy(&values, 1.0, 0.0)
    }

    fn upper_action(&self, tau: usize) -> usize {
        self.actions[tau]
    }
}

fn exhaustive(n_lower: usize, n_upper: usize) -> SamplerConfig {
    SamplerConfig {
        n_lower,
        n_upper,
        n_nested: n_lower,
        stratified: true,
    }
}

fn skewed(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from(seed, &[]);
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
    let z: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / z).collect()
}

#[test]
fn exhaustive_sampling_reproduces_exact_posterior() {
    let m = Table::new(1, 6);
    for n in 0..=6 {
        let proposals = Proposals {
            lower: skewed(4, n as u64),
            upper: skewed(2, 10 + n as u64),
            nested: (0..=n).map(|t| skewed(4, 20 + t as u64)).collect(),
        };
        for level in [1, 2] {
            let exact = exact_posterior(&m, level, n).unwrap();
            let is = importance_sample(&m, level, n, &proposals, &exhaustive(4, 2), &mut rng_from(n as u64, &[])).unwrap();
            assert!(exact.posterior.max_abs_diff(&is.posterior) < 1e-9, "level {level} n {n}");
        }
    }
}

#[test]
fn exhaustive_sampling_reproduces_exact_on_construction() {
    let cfg = ConstructionConfig::default();
    let ep = &synthesize_episodes(&cfg, EpisodeKind::Test, 1, 17).unwrap()[0];
    let m = ConstructionModel::new(&cfg, ep).unwrap();
    let proposals = Proposals::uniform(45, 2);
    for n in [1, 4, m.steps()] {
        let exact = exact_posterior(&m, 2, n).unwrap();
        let is = importance_sample(&m, 2, n, &proposals, &exhaustive(45, 2), &mut rng_from(0, &[])).unwrap();
        assert!(exact.posterior.max_abs_diff(&is.posterior) < 1e-9);
    }
}

#[test]
fn particle_weight_is_the_sum_of_its_log_terms() {
    let cfg = ConstructionConfig::default();
    let ep = &synthesize_episodes(&cfg, EpisodeKind::Test, 1, 23).unwrap()[0];
    let m = ConstructionModel::new(&cfg, ep).unwrap();
    let n = m.steps().min(8);
    let hinder = 1;
    let lower = ep.agents[0].goal as usize;
    let beliefs: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|tau| exact_posterior(&m, 1, tau).unwrap().posterior.probs().iter().copied().enumerate().collect())
        .collect();
    let density = 0.037;
    let particle = ParticleTrajectory {
        upper: hinder,
        lower,
        beliefs: beliefs.clone(),
        density,
    };
    let mut hand = -density.ln();
    for (tau, b) in beliefs.iter().enumerate() {
        hand += m.lower_likelihood(tau, lower).ln();
        let pi = m.upper_policy(tau, b, hinder);
        hand += pi.prob(m.upper_action(tau)).ln();
    }
    assert!((compute_weight(&m, &particle) - hand).abs() < 1e-9);
}

#[test]
fn weights_estimate_the_evidence_without_bias() {
    let m = Table::new(2, 5);
    let n = 5;
    let z: f64 = (0..4).map(|h| (0..n).map(|t| m.lower[t][h]).product::<f64>()).sum();
    let q = skewed(4, 3);
    let proposals = Proposals {
        lower: q,
        ..Proposals::uniform(4, 2)
    };
    let cfg = SamplerConfig {
        n_lower: 3,
        n_upper: 1,
        n_nested: 1,
        stratified: false,
    };
    let runs = 4000;
    let estimates: Vec<f64> = (0..runs)
        .map(|r| {
            let inf = importance_sample(&m, 1, n, &proposals, &cfg, &mut rng_from(r, &[])).unwrap();
            inf.raw_weights.iter().sum::<f64>() / 3.0
        })
        .collect();
    let mean = estimates.iter().sum::<f64>() / runs as f64;
    let var = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (runs - 1) as f64;
    let se = (var / runs as f64).sqrt();
    assert!((mean - z).abs() < 4.0 * se, "mean {mean} z {z} se {se}");
}

#[test]
fn independent_level1_sampling_converges_to_exact() {
    let m = Table::new(3, 6);
    let proposals = Proposals {
        lower: skewed(4, 1),
        upper: skewed(2, 2),
        nested: Vec::new(),
    };
    let mut errors = Vec::new();
    for budget in [10, 100, 10_000] {
        let cfg = SamplerConfig {
            n_lower: budget,
            n_upper: 1,
            n_nested: 1,
            stratified: false,
        };
        let exact = exact_posterior(&m, 1, 6).unwrap();
        let is = importance_sample(&m, 1, 6, &proposals, &cfg, &mut rng_from(budget as u64, &[])).unwrap();
        let worst = exact.posterior.max_abs_diff(&is.posterior);
        errors.push(worst);
    }
    assert!(errors[2] < 0.03, "{errors:?}");
    assert!(errors[2] < errors[0]);
}

#[test]
fn levels_other_than_one_and_two_are_unsupported() {
    let m = Table::new(4, 3);
    let p = Proposals::uniform(4, 2);
    for level in [0, 3] {
        assert_eq!(exact_posterior(&m, level, 2).unwrap_err(), Error::UnsupportedLevel(level));
        let err = importance_sample(&m, level, 2, &p, &exhaustive(4, 2), &mut rng_from(0, &[])).unwrap_err();
        assert_eq!(err, Error::UnsupportedLevel(level));
    }
}

#[test]
fn a_single_particle_gives_a_point_mass() {
    let m = Table::new(5, 4);
    let cfg = SamplerConfig {
        n_lower: 1,
        n_upper: 1,
        n_nested: 1,
        stratified: true,
    };
    for level in [1, 2] {
        let inf = importance_sample(&m, level, 4, &Proposals::uniform(4, 2), &cfg, &mut rng_from(9, &[])).unwrap();
        let probs = inf.posterior.probs();
        assert_eq!(probs.iter().filter(|&&p| p > 0.0).count(), 1);
        assert_eq!(probs[inf.posterior.argmax()], 1.0);
        assert!((inf.ess - 1.0).abs() < 1e-12);
    }
}

#[test]
fn impossible_evidence_falls_back_to_uniform_over_draws() {
    let mut m = Table::new(6, 3);
    for row in &mut m.lower {
        *row = [0.0; 4];
    }
    let cfg = SamplerConfig {
        n_lower: 2,
        n_upper: 1,
        n_nested: 1,
        stratified: true,
    };
    let inf = importance_sample(&m, 1, 3, &Proposals::uniform(4, 2), &cfg, &mut rng_from(0, &[])).unwrap();
    assert!(inf.all_weights_zero);
    let mut nonzero: Vec<f64> = inf.posterior.probs().iter().copied().filter(|&p| p > 0.0).collect();
    nonzero.sort_by(f64::total_cmp);
    assert_eq!(nonzero, vec![0.5, 0.5]);
}

#[test]
fn sampler_spends_less_than_exact() {
    let cfg = ConstructionConfig::default();
    let ep = &synthesize_episodes(&cfg, EpisodeKind::Test, 1, 31).unwrap()[0];
    let m = ConstructionModel::new(&cfg, ep).unwrap();
    let n = m.steps();
    let exact = exact_posterior(&m, 2, n).unwrap();
    let small = SamplerConfig {
        n_lower: 3,
        n_upper: 2,
        n_nested: 3,
        stratified: true,
    };
    let is = importance_sample(&m, 2, n, &Proposals::uniform(45, 2), &small, &mut rng_from(0, &[])).unwrap();
    assert!(is.compute.total() * 5 < exact.compute.total());
}

#[test]
fn predicted_action_is_the_goal_weighted_policy_mixture() {
    let m = Table::new(7, 4);
    let exact = exact_posterior(&m, 2, 4).unwrap();
    let pred = predict_action(&m, 4, &exact);
    let marg = exact.posterior.upper_marginal();
    let belief: Vec<(usize, f64)> = exact_posterior(&m, 1, 4).unwrap().posterior.probs().iter().copied().enumerate().collect();
    for a in 0..3 {
        let hand: f64 = (0..2).map(|g| marg[g] * m.upper_policy(4, &belief, g).prob(a)).sum();
        assert!((pred.prob(a) - hand).abs() < 1e-9);
    }
}

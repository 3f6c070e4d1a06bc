//! Analytic backprop gradients against central finite differences.

use nested_tom_core::neural::{Activation, Gradients, MlpParams};
use nested_tom_core::rng::rng_from;
use rand::Rng;

const H: f64 = 1e-5;

/// Central-difference gradient of the loss, one parameter at a time.
fn numeric_gradient(params: &MlpParams, x: &[f64], targets: &[usize]) -> Vec<f64> {
    let mut probe = params.clone();
    let n = probe.num_params();
    let mut grad = Vec::with_capacity(n);
    for k in 0..n {
        let orig = *probe.params_mut().nth(k).unwrap();
        *probe.params_mut().nth(k).unwrap() = orig + H;
        let up = probe.loss(x, targets).unwrap();
        *probe.params_mut().nth(k).unwrap() = orig - H;
        let down = probe.loss(x, targets).unwrap();
        *probe.params_mut().nth(k).unwrap() = orig;
        grad.push((up - down) / (2.0 * H));
    }
    grad
}

fn max_relative_error(params: &MlpParams, x: &[f64], targets: &[usize]) -> f64 {
    let mut g = Gradients::zeros_like(params);
    params.accumulate_gradient(x, targets, &mut g).unwrap();
    let numeric = numeric_gradient(params, x, targets);
    g.values()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / (a.abs() + n.abs()).max(1e-6))
        .fold(0.0, f64::max)
}

#[test]
fn backprop_matches_central_differences_on_50_random_nets() {
    let mut worst = 0.0f64;
    for trial in 0..50u64 {
        let mut rng = rng_from(2024, &[trial]);
        let in_dim = rng.gen_range(2..6);
        let hidden = rng.gen_range(2..6);
        let hidden2 = rng.gen_range(2..5);
        let heads = if trial % 2 == 0 { vec![3] } else { vec![2, 3] };
        let out: usize = heads.iter().sum();
        let params = MlpParams::random_full(
            &[in_dim, hidden, hidden2, out],
            Activation::Tanh,
            heads.clone(),
            1.0,
            &mut rng,
        );
        let x: Vec<f64> = (0..in_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let targets: Vec<usize> = heads.iter().map(|&h| rng.gen_range(0..h)).collect();
        worst = worst.max(max_relative_error(&params, &x, &targets));
    }
    println!("worst relative error over 50 nets: {worst:.3e}");
    assert!(worst < 1e-4, "max relative error {worst}");
}

#[test]
fn relu_gradients_match_away_from_kinks() {
    let mut rng = rng_from(77, &[]);
    let params = MlpParams::random_full(&[4, 6, 3], Activation::Relu, vec![3], 1.0, &mut rng);
    let x = [0.31, -0.72, 0.55, 0.18];
    let pre = params.layers[0].weights.chunks(4).zip(&params.layers[0].biases);
    // skip the check if any hidden pre-activation sits within H of the kink
    let near_kink = pre
        .map(|(row, b)| row.iter().zip(&x).map(|(w, xi)| w * xi).sum::<f64>() + b)
        .any(|z: f64| z.abs() < 1e-3);
    assert!(!near_kink);
    assert!(max_relative_error(&params, &x, &[1]) < 1e-4);
}

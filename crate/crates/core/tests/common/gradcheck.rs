//! Central-difference checks of the analytic training gradients.

use qaoa_trust::graph::{Family, Graph};
use qaoa_trust::predictor::loss::median_pairwise_distance;
use qaoa_trust::predictor::{batch_loss, GinModel, GraphInput, HeadKind, LossWeights, ModelShape};
use qaoa_trust::rng::rng;
use rand::seq::SliceRandom;
use rand::Rng as _;

pub const STEP: f64 = 1e-5;
pub const WEIGHTS_PER_TERM: usize = 20;

pub fn batch(seed: u64) -> (Vec<GraphInput>, Vec<Vec<f64>>) {
    let mut r = rng(seed);
    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    for i in 0..8 {
        let g = Graph::generate(Family::ALL[i % 4], 8, seed * 100 + i as u64).unwrap();
        inputs.push(GraphInput::canonical(&g, 6));
        targets.push((0..4).map(|_| r.random_range(-0.8..0.8)).collect());
    }
    (inputs, targets)
}

pub fn weights(mse: f64, nll: f64, w2: f64, cl: f64, delta: f64) -> LossWeights {
    LossWeights {
        mse,
        nll,
        w2,
        cl,
        tau_w: 0.5,
        tau_c: 0.1,
        delta,
    }
}

/// Each loss term alone, then the phase-two combination, with its batch
/// seed.
pub fn terms() -> Vec<(&'static str, LossWeights, u64)> {
    let delta = |seed| median_pairwise_distance(&batch(seed).1);
    vec![
        ("mse", weights(1.0, 0.0, 0.0, 0.0, 1.0), 1),
        ("nll", weights(0.0, 1.0, 0.0, 0.0, 1.0), 2),
        ("w2", weights(0.0, 0.0, 1.0, 0.0, 1.0), 3),
        ("contrastive", weights(0.0, 0.0, 0.0, 1.0, delta(4)), 4),
        ("combined", weights(0.0, 1.0, 0.1, 0.05, delta(5)), 5),
    ]
}

/// Largest relative error between the analytic and numerical derivative
/// over the first [`WEIGHTS_PER_TERM`] shuffled weights whose numerical
/// derivative is not negligible.
pub fn max_relative_error(w: &LossWeights, seed: u64) -> Result<f64, String> {
    let (inputs, targets) = batch(seed);
    let model = GinModel::init(ModelShape::new(6, 2), HeadKind::Gaussian, seed);
    let mut grad = vec![0.0; model.num_params()];
    batch_loss(&model, &inputs, &targets, w, Some(&mut grad)).map_err(|e| e.to_string())?;

    let mut order: Vec<usize> = (0..model.num_params()).collect();
    order.shuffle(&mut rng(seed ^ 0xABC));
    let loss = |m: &GinModel| {
        batch_loss(m, &inputs, &targets, w, None)
            .map(|l| l.total)
            .map_err(|e| e.to_string())
    };
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for &i in &order {
        let mut plus = model.clone();
        plus.params_mut()[i] += STEP;
        let mut minus = model.clone();
        minus.params_mut()[i] -= STEP;
        let numeric = (loss(&plus)? - loss(&minus)?) / (2.0 * STEP);
        if numeric.abs() < 1e-6 {
            continue;
        }
        worst = worst.max((grad[i] - numeric).abs() / grad[i].abs().max(numeric.abs()));
        checked += 1;
        if checked == WEIGHTS_PER_TERM {
            return Ok(worst);
        }
    }
    Err(format!("only {checked} weights with a usable derivative"))
}

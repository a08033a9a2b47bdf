//! Full-batch two-phase training with Adam, cosine annealing restarted at
//! the phase boundary, global-norm clipping and early stopping.

use std::fmt::Write as _;

use super::loss::{self, median_pairwise_distance};
use super::model::{GinModel, GraphInput, HeadKind, ModelShape};
use super::PredictorError;
use crate::graph::Graph;
use crate::rng::{derive_seed, rng};
use rand::Rng as _;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub k: usize,
    pub p: usize,
    pub head: HeadKind,
    pub lambda_w: f64,
    pub lambda_c: f64,
    pub tau_w: f64,
    pub tau_c: f64,
    /// Positive-pair threshold; `None` uses the median pairwise target
    /// distance of the training set.
    pub contrastive_delta: Option<f64>,
    pub lr: f64,
    pub weight_decay: f64,
    pub phase1_epochs: usize,
    pub phase2_epochs: usize,
    pub grad_clip: f64,
    pub patience: usize,
    /// Random per-column sign flips of the spectral encoding each epoch.
    pub sign_flips: bool,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            k: 6,
            p: 2,
            head: HeadKind::Gaussian,
            lambda_w: 0.1,
            lambda_c: 0.05,
            tau_w: 0.5,
            tau_c: 0.1,
            contrastive_delta: None,
            lr: 1e-3,
            weight_decay: 1e-5,
            phase1_epochs: 150,
            phase2_epochs: 150,
            grad_clip: 1.0,
            patience: 50,
            sign_flips: true,
            seed: 0,
        }
    }
}

impl TrainingConfig {
    pub fn epochs(&self) -> usize {
        self.phase1_epochs + self.phase2_epochs
    }

    fn validate(&self) -> Result<(), PredictorError> {
        let positive = [
            ("tau_w", self.tau_w),
            ("tau_c", self.tau_c),
            ("lr", self.lr),
            ("grad_clip", self.grad_clip),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(PredictorError::BadConfig(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        for (name, v) in [
            ("lambda_w", self.lambda_w),
            ("lambda_c", self.lambda_c),
            ("weight_decay", self.weight_decay),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(PredictorError::BadConfig(format!(
                    "{name} must be nonnegative, got {v}"
                )));
            }
        }
        if self.p == 0 {
            return Err(PredictorError::BadConfig("p must be at least 1".into()));
        }
        Ok(())
    }

    /// Loss weights of phase 1 or 2. The point model keeps the phase-1
    /// objective throughout.
    pub fn weights(&self, phase: u8, delta: f64) -> LossWeights {
        let phase2 = phase == 2 && self.head == HeadKind::Gaussian;
        LossWeights {
            mse: if phase2 { 0.0 } else { 1.0 },
            nll: if phase2 { 1.0 } else { 0.0 },
            w2: if phase2 { self.lambda_w } else { 0.0 },
            cl: self.lambda_c,
            tau_w: self.tau_w,
            tau_c: self.tau_c,
            delta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub mse: f64,
    pub nll: f64,
    pub w2: f64,
    pub cl: f64,
    pub tau_w: f64,
    pub tau_c: f64,
    pub delta: f64,
}

/// Unweighted term values and the weighted total.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossBreakdown {
    pub total: f64,
    pub mse: f64,
    pub nll: f64,
    pub w2: f64,
    pub cl: f64,
}

/// Evaluates the weighted loss over the whole batch. When `grad` is given
/// it is overwritten with the parameter gradient.
pub fn batch_loss(
    model: &GinModel,
    inputs: &[GraphInput],
    targets: &[Vec<f64>],
    w: &LossWeights,
    grad: Option<&mut [f64]>,
) -> Result<LossBreakdown, PredictorError> {
    let out_dim = model.shape().out_dim();
    if let Some(t) = targets.iter().find(|t| t.len() != out_dim) {
        return Err(PredictorError::TargetDim {
            expected: out_dim,
            got: t.len(),
        });
    }
    let keep = grad.is_some();
    let fwds = inputs
        .iter()
        .map(|x| model.forward(x, keep))
        .collect::<Result<Vec<_>, _>>()?;
    let mu: Vec<Vec<f64>> = fwds.iter().map(|f| f.mu.clone()).collect();
    let lv: Vec<Vec<f64>> = fwds.iter().map(|f| f.logvar.clone()).collect();

    let b = inputs.len();
    let mut d_mu = vec![vec![0.0; out_dim]; b];
    let mut d_lv = vec![vec![0.0; out_dim]; b];
    let mut out = LossBreakdown::default();
    let mut accumulate = |weight: f64, l: loss::HeadLoss| {
        for i in 0..b {
            for j in 0..out_dim {
                d_mu[i][j] += weight * l.d_mu[i][j];
                d_lv[i][j] += weight * l.d_logvar[i][j];
            }
        }
        l.value
    };
    if w.mse > 0.0 {
        out.mse = accumulate(w.mse, loss::mse(&mu, targets));
    }
    if w.nll > 0.0 {
        out.nll = accumulate(w.nll, loss::nll(&mu, &lv, targets));
    }
    if w.w2 > 0.0 {
        out.w2 = accumulate(w.w2, loss::w2(&mu, &lv, targets, w.tau_w));
    }
    let mut d_emb = None;
    if w.cl > 0.0 {
        let emb: Vec<Vec<f64>> = fwds.iter().map(|f| f.embedding.clone()).collect();
        let l = loss::contrastive(&emb, targets, w.delta, w.tau_c);
        out.cl = l.value;
        d_emb = Some(
            l.d_embedding
                .into_iter()
                .map(|r| r.into_iter().map(|v| w.cl * v).collect::<Vec<f64>>())
                .collect::<Vec<_>>(),
        );
    }
    out.total = w.mse * out.mse + w.nll * out.nll + w.w2 * out.w2 + w.cl * out.cl;

    if let Some(grad) = grad {
        grad.fill(0.0);
        for (i, (x, f)) in inputs.iter().zip(&fwds).enumerate() {
            let de = d_emb.as_ref().map(|d| d[i].as_slice());
            model.backward(x, f, &d_mu[i], &d_lv[i], de, grad);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingLogRow {
    pub epoch: usize,
    pub phase: u8,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
    pub lr: f64,
}

pub fn log_csv(rows: &[TrainingLogRow]) -> String {
    let mut s = String::from("epoch,phase,train_loss,val_loss,lr\n");
    for r in rows {
        let val = r.val_loss.map(|v| format!("{v:.8}")).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{:.8},{},{:.8e}",
            r.epoch, r.phase, r.train_loss, val, r.lr
        );
    }
    s
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub model: GinModel,
    pub log: Vec<TrainingLogRow>,
    /// Epoch whose weights were kept.
    pub best_epoch: usize,
    pub delta: f64,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize) -> Self {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * grad[i];
            self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * grad[i] * grad[i];
            params[i] -= lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + Self::EPS);
        }
    }
}

fn cosine_lr(base: f64, step: usize, total: usize) -> f64 {
    0.5 * base * (1.0 + (std::f64::consts::PI * step as f64 / total.max(1) as f64).cos())
}

fn inputs_for(set: &[(Graph, Vec<f64>)], k: usize) -> Vec<GraphInput> {
    set.iter()
        .map(|(g, _)| GraphInput::canonical(g, k))
        .collect()
}

/// Trains from a Glorot initialization seeded by `config.seed`. Early
/// stopping monitors the phase-2 validation loss; without a validation set
/// the final weights are returned. Weights are rounded to `f32` at the end
/// so a saved checkpoint reproduces the returned model exactly.
pub fn train(
    train_set: &[(Graph, Vec<f64>)],
    val_set: &[(Graph, Vec<f64>)],
    config: &TrainingConfig,
) -> Result<TrainedModel, PredictorError> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(PredictorError::EmptyDataset);
    }
    let targets: Vec<Vec<f64>> = train_set.iter().map(|(_, t)| t.clone()).collect();
    let val_targets: Vec<Vec<f64>> = val_set.iter().map(|(_, t)| t.clone()).collect();
    let delta = config
        .contrastive_delta
        .unwrap_or_else(|| median_pairwise_distance(&targets));
    let base_inputs = inputs_for(train_set, config.k);
    let val_inputs = inputs_for(val_set, config.k);

    let shape = ModelShape::new(config.k, config.p);
    let mut model = GinModel::init(shape, config.head, derive_seed(config.seed, 0x1417));
    let mut adam = Adam::new(model.num_params());
    let mut grad = vec![0.0; model.num_params()];
    let mut log = Vec::with_capacity(config.epochs());

    let mut best: Option<(f64, Vec<f64>, usize)> = None;
    let mut since_best = 0;
    for epoch in 0..config.epochs() {
        let (phase, step, len) = if epoch < config.phase1_epochs {
            (1u8, epoch, config.phase1_epochs)
        } else {
            (2u8, epoch - config.phase1_epochs, config.phase2_epochs)
        };
        let lr = cosine_lr(config.lr, step, len);
        let w = config.weights(phase, delta);

        let inputs: Vec<GraphInput> = if config.sign_flips && config.k > 0 {
            let mut r = rng(derive_seed(config.seed, 0x5150 + epoch as u64));
            base_inputs
                .iter()
                .map(|x| {
                    let signs: Vec<f64> = (0..config.k)
                        .map(|_| if r.random::<bool>() { 1.0 } else { -1.0 })
                        .collect();
                    x.with_signs(&signs)
                })
                .collect()
        } else {
            base_inputs.clone()
        };

        let l = batch_loss(&model, &inputs, &targets, &w, Some(&mut grad))?;
        if !l.total.is_finite() {
            return Err(PredictorError::NonFiniteLoss {
                epoch,
                phase,
                value: l.total,
            });
        }
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm > config.grad_clip {
            let s = config.grad_clip / norm;
            grad.iter_mut().for_each(|g| *g *= s);
        }
        if config.weight_decay > 0.0 {
            for (g, p) in grad.iter_mut().zip(model.params()) {
                *g += config.weight_decay * p;
            }
        }
        adam.step(model.params_mut(), &grad, lr);

        let val_loss = if val_inputs.is_empty() {
            None
        } else {
            Some(batch_loss(&model, &val_inputs, &val_targets, &w, None)?.total)
        };
        log.push(TrainingLogRow {
            epoch,
            phase,
            train_loss: l.total,
            val_loss,
            lr,
        });

        if let (2, Some(v)) = (phase, val_loss) {
            if !v.is_finite() {
                return Err(PredictorError::NonFiniteLoss {
                    epoch,
                    phase,
                    value: v,
                });
            }
            if best.as_ref().is_none_or(|b| v < b.0) {
                best = Some((v, model.params().to_vec(), epoch));
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= config.patience {
                    break;
                }
            }
        }
    }

    let best_epoch = match best {
        Some((_, params, epoch)) => {
            model.params_mut().copy_from_slice(&params);
            epoch
        }
        None => log.len().saturating_sub(1),
    };
    model.quantize_f32();
    Ok(TrainedModel {
        model,
        log,
        best_epoch,
        delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Family;

    #[test]
    fn cosine_schedule_endpoints() {
        assert_eq!(cosine_lr(1e-3, 0, 150), 1e-3);
        assert!((cosine_lr(1e-3, 75, 150) - 5e-4).abs() < 1e-15);
        assert!(cosine_lr(1e-3, 149, 150) > 0.0);
    }

    #[test]
    fn memorizes_a_single_graph() {
        let g = Graph::generate(Family::Er, 8, 3).unwrap();
        let target = vec![0.4, 0.7, 0.5, 0.2];
        let cfg = TrainingConfig {
            phase1_epochs: 400,
            phase2_epochs: 0,
            lr: 1e-2,
            ..TrainingConfig::default()
        };
        let trained = train(&[(g.clone(), target.clone())], &[], &cfg).unwrap();
        let mu = trained.model.predict(&g).unwrap().mu;
        let mse: f64 = mu
            .iter()
            .zip(&target)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            / 4.0;
        assert!(mse < 1e-3, "mse {mse}");
    }

    #[test]
    fn rejects_empty_and_bad_configs() {
        assert_eq!(
            train(&[], &[], &TrainingConfig::default()).err(),
            Some(PredictorError::EmptyDataset)
        );
        let g = Graph::generate(Family::Er, 6, 1).unwrap();
        let cfg = TrainingConfig {
            lr: 0.0,
            ..TrainingConfig::default()
        };
        assert!(matches!(
            train(&[(g, vec![0.0; 4])], &[], &cfg),
            Err(PredictorError::BadConfig(_))
        ));
    }

    #[test]
    fn log_has_header_and_rows() {
        let rows = vec![TrainingLogRow {
            epoch: 0,
            phase: 1,
            train_loss: 1.5,
            val_loss: None,
            lr: 1e-3,
        }];
        let csv = log_csv(&rows);
        assert!(csv.starts_with("epoch,phase,train_loss,val_loss,lr\n0,1,"));
    }
}

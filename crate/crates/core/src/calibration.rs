//! Scalar uncertainty, its normalization constants, split-conformal radii
//! and calibration diagnostics.

use thiserror::Error;

use crate::predictor::GaussianPrediction;
use crate::stats::{self, StatsError};

#[derive(Debug, Error, PartialEq)]
pub enum CalibrationError {
    #[error("need at least {need} items, got {got}")]
    TooFew { need: usize, got: usize },
    #[error("uncertainties have zero interquartile range")]
    DegenerateIqr,
    #[error("{m} calibration scores cannot certify alpha = {alpha}")]
    TooFewForAlpha { m: usize, alpha: f64 },
    #[error("alpha {0} outside (0, 1)")]
    BadAlpha(f64),
    #[error("{0} vs {1} items")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 bins, got {0}")]
    BadBins(usize),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// `U = tr(Sigma) / 2p`, the mean predicted variance.
pub fn scalar_uncertainty(var: &[f64]) -> f64 {
    var.iter().sum::<f64>() / var.len() as f64
}

/// Nonconformity score: the Mahalanobis distance of the target under the
/// predicted Gaussian, `sum_j (theta_j - mu_j)^2 / sigma_j^2`.
pub fn conformal_score(pred: &GaussianPrediction, target: &[f64]) -> f64 {
    pred.mu
        .iter()
        .zip(&pred.logvar)
        .zip(target)
        .map(|((m, l), t)| (t - m).powi(2) * (-l).exp())
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationConstants {
    pub u_med: f64,
    pub u_iqr: f64,
    /// Ascending.
    pub scores: Vec<f64>,
}

impl CalibrationConstants {
    /// Median and type-7 IQR of the validation uncertainties plus the sorted
    /// conformal scores.
    pub fn fit(
        preds: &[GaussianPrediction],
        targets: &[Vec<f64>],
    ) -> Result<Self, CalibrationError> {
        if preds.len() != targets.len() {
            return Err(CalibrationError::LengthMismatch(preds.len(), targets.len()));
        }
        if preds.len() < 2 {
            return Err(CalibrationError::TooFew {
                need: 2,
                got: preds.len(),
            });
        }
        let u: Vec<f64> = preds.iter().map(|p| scalar_uncertainty(&p.var())).collect();
        let u_iqr = stats::iqr(&u);
        if !(u_iqr > 0.0) {
            return Err(CalibrationError::DegenerateIqr);
        }
        let scores = preds
            .iter()
            .zip(targets)
            .map(|(p, t)| conformal_score(p, t))
            .collect::<Vec<_>>();
        Ok(CalibrationConstants {
            u_med: stats::median(&u),
            u_iqr,
            scores: stats::sorted(&scores),
        })
    }

    pub fn conformal_quantile(&self, alpha: f64) -> Result<f64, CalibrationError> {
        conformal_quantile(&self.scores, alpha)
    }

    /// `u_med`, `u_iqr`, then one score per line.
    pub fn to_text(&self) -> String {
        let mut s = format!("u_med = {:e}\nu_iqr = {:e}\n", self.u_med, self.u_iqr);
        for v in &self.scores {
            s.push_str(&format!("score = {v:e}\n"));
        }
        s
    }
}

/// Split-conformal radius: the `ceil((M + 1)(1 - alpha))`-th smallest of the
/// `M` sorted scores.
pub fn conformal_quantile(sorted_scores: &[f64], alpha: f64) -> Result<f64, CalibrationError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CalibrationError::BadAlpha(alpha));
    }
    let m = sorted_scores.len();
    let k = ((m + 1) as f64 * (1.0 - alpha) - 1e-9).ceil() as usize;
    if k == 0 || k > m {
        return Err(CalibrationError::TooFewForAlpha { m, alpha });
    }
    Ok(sorted_scores[k - 1])
}

/// Fraction of scores at or below `q`.
pub fn coverage(q: f64, scores: &[f64]) -> f64 {
    scores.iter().filter(|s| **s <= q).count() as f64 / scores.len() as f64
}

/// One reliability bin: mean normalized uncertainty, mean normalized error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReliabilityBin {
    pub predicted: f64,
    pub observed: f64,
    pub count: usize,
}

fn min_max(x: &[f64]) -> Vec<f64> {
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        x.iter().map(|v| (v - lo) / (hi - lo)).collect()
    } else {
        vec![0.0; x.len()]
    }
}

/// Both signals are min-max scaled to `[0, 1]` (a constant signal maps to
/// 0), items are sorted by uncertainty and split into `bins` equal-mass bins.
pub fn reliability_bins(
    uncertainties: &[f64],
    errors: &[f64],
    bins: usize,
) -> Result<Vec<ReliabilityBin>, CalibrationError> {
    if uncertainties.len() != errors.len() {
        return Err(CalibrationError::LengthMismatch(
            uncertainties.len(),
            errors.len(),
        ));
    }
    if bins < 2 {
        return Err(CalibrationError::BadBins(bins));
    }
    let n = uncertainties.len();
    if n < bins {
        return Err(CalibrationError::TooFew { need: bins, got: n });
    }
    let u = min_max(uncertainties);
    let e = min_max(errors);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| u[a].total_cmp(&u[b]).then(a.cmp(&b)));
    Ok((0..bins)
        .map(|b| {
            let members = &idx[b * n / bins..(b + 1) * n / bins];
            let c = members.len() as f64;
            ReliabilityBin {
                predicted: members.iter().map(|&i| u[i]).sum::<f64>() / c,
                observed: members.iter().map(|&i| e[i]).sum::<f64>() / c,
                count: members.len(),
            }
        })
        .collect())
}

/// Mass-weighted mean gap between the bins' predicted and observed levels.
pub fn ece(uncertainties: &[f64], errors: &[f64], bins: usize) -> Result<f64, CalibrationError> {
    let n = uncertainties.len() as f64;
    Ok(reliability_bins(uncertainties, errors, bins)?
        .iter()
        .map(|b| b.count as f64 / n * (b.predicted - b.observed).abs())
        .sum())
}

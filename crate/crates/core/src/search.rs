//! End-to-end inference: predicted Gaussian -> budget -> trust region ->
//! best-of-K seeding -> projected Nelder-Mead polish.

use thiserror::Error;

use crate::calibration::{scalar_uncertainty, CalibrationError};
use crate::nelder_mead::{nelder_mead, NelderMeadOptions};
use crate::objective::{MeteredObjective, Method, RunResult};
use crate::predictor::GaussianPrediction;
use crate::qaoa::{CutTable, NoiseModel, QaoaError};
use crate::rng::{derive_seed, rng};
use crate::trust::{allocate_budget, chi2_quantile, BudgetAllocation, TrustError, TrustRegion};
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Error, PartialEq)]
pub enum SearchError {
    #[error(transparent)]
    Qaoa(#[from] QaoaError),
    #[error(transparent)]
    Trust(#[from] TrustError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error("{0}")]
    Invalid(String),
}

/// Squared radius of the trust region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Radius {
    /// `chi2_{2p}(alpha)`.
    Chi2 { alpha: f64 },
    /// A conformal quantile computed beforehand.
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct UqConfig {
    pub radius: Radius,
    pub t_base: usize,
    /// When false, seeds come from the untruncated Gaussian and the polish
    /// is unconstrained; the adaptive budget is kept.
    pub trust_region: bool,
}

impl Default for UqConfig {
    fn default() -> Self {
        UqConfig {
            radius: Radius::Chi2 { alpha: 0.95 },
            t_base: 30,
            trust_region: true,
        }
    }
}

/// Normalization of the scalar uncertainty, fitted on validation graphs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintyScale {
    pub u_med: f64,
    pub u_iqr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UqRun {
    pub result: RunResult,
    pub uncertainty: f64,
    pub allocation: BudgetAllocation,
    /// The seeds in evaluation order; the first is the predicted mean.
    pub seeds: Vec<Vec<f64>>,
    pub seed_values: Vec<f64>,
}

/// Runs one instance. The first of the `K` seeds is the predicted mean
/// itself; the remaining `K - 1` are drawn from the truncated Gaussian.
pub fn uq_qaoa_infer(
    table: &CutTable,
    pred: &GaussianPrediction,
    scale: UncertaintyScale,
    config: &UqConfig,
    noise: NoiseModel,
    seed: u64,
) -> Result<UqRun, SearchError> {
    let var = pred.var();
    let std = pred.std();
    let uncertainty = scalar_uncertainty(&var);
    let allocation = allocate_budget(uncertainty, scale.u_med, scale.u_iqr, config.t_base)?;
    let q = match config.radius {
        Radius::Chi2 { alpha } => chi2_quantile(pred.mu.len(), alpha)?,
        Radius::Fixed(q) => q,
    };
    let region = TrustRegion::new(pred.mu.clone(), &std, q)?;

    let mut sample_rng = rng(derive_seed(seed, 0x5EED));
    let extra = allocation.samples - 1;
    let mut seeds = vec![pred.mu.clone()];
    if config.trust_region {
        seeds.extend(region.sample_truncated(extra, &mut sample_rng)?);
    } else {
        for _ in 0..extra {
            seeds.push(
                pred.mu
                    .iter()
                    .zip(&std)
                    .map(|(m, s)| {
                        let z: f64 = StandardNormal.sample(&mut sample_rng);
                        m + s * z
                    })
                    .collect(),
            );
        }
    }

    let mut obj = MeteredObjective::new(table, noise, seed);
    let mut seed_values = Vec::with_capacity(seeds.len());
    for s in &seeds {
        seed_values.push(obj.eval(s)?);
    }
    // lowest index wins ties
    let best = (0..seeds.len()).fold(0, |b, i| {
        if seed_values[i] > seed_values[b] {
            i
        } else {
            b
        }
    });

    let opts = NelderMeadOptions::with_iters(allocation.iterations);
    let mut f = |x: &[f64]| obj.eval(x).map_err(SearchError::from);
    if config.trust_region {
        nelder_mead(
            &mut f,
            &seeds[best],
            Some(seed_values[best]),
            Some(&region),
            &opts,
        )?;
    } else {
        let opts = NelderMeadOptions {
            steps: std
                .iter()
                .map(|s| crate::nelder_mead::REGION_STEP_FRACTION * s)
                .collect(),
            ..opts
        };
        nelder_mead(&mut f, &seeds[best], Some(seed_values[best]), None, &opts)?;
    }
    let result = obj.finish(Method::UqQaoa)?;
    Ok(UqRun {
        result,
        uncertainty,
        allocation,
        seeds,
        seed_values,
    })
}

//! Comparison initializers, all refined by the same metered Nelder-Mead.

use std::f64::consts::PI;

use rand::Rng as _;
use thiserror::Error;

use crate::graph::{handcrafted, Graph};
use crate::nelder_mead::{nelder_mead, NelderMeadOptions};
use crate::objective::{MeteredObjective, Method, RunResult};
use crate::qaoa::{CutTable, NoiseModel, QaoaError};
use crate::rng::{derive_seed, rng};
use crate::search::SearchError;
use crate::stats;

#[derive(Debug, Error, PartialEq)]
pub enum BaselineError {
    #[error("k = {k} exceeds the {available} training graphs")]
    KTooLarge { k: usize, available: usize },
    #[error("no training targets")]
    NoTargets,
    #[error(transparent)]
    Search(#[from] SearchError),
}

impl From<QaoaError> for BaselineError {
    fn from(e: QaoaError) -> Self {
        BaselineError::Search(e.into())
    }
}

/// Iteration budgets of the baselines.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineConfig {
    pub random_restarts: usize,
    pub random_iters: usize,
    pub heuristic_iters: usize,
    /// Added to every coordinate of the heuristic's second start.
    pub heuristic_jitter: f64,
    pub knn_k: usize,
    pub knn_iters: usize,
    pub tqa_delta: f64,
    pub tqa_iters: usize,
    /// Polish iterations of the point predictor as a multiple of `T_base`.
    pub gnn_point_factor: usize,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            random_restarts: 4,
            random_iters: 48,
            heuristic_iters: 48,
            heuristic_jitter: 0.05,
            knn_k: 5,
            knn_iters: 60,
            tqa_delta: 0.75,
            tqa_iters: 75,
            gnn_point_factor: 2,
        }
    }
}

/// Unconstrained Nelder-Mead from `x0` with the shared tolerances.
pub fn refine(obj: &mut MeteredObjective<'_>, x0: &[f64], iters: usize) -> Result<(), SearchError> {
    let mut f = |x: &[f64]| obj.eval(x).map_err(SearchError::from);
    nelder_mead(
        &mut f,
        x0,
        None,
        None,
        &NelderMeadOptions::with_iters(iters),
    )?;
    Ok(())
}

fn run_from_starts(
    table: &CutTable,
    noise: NoiseModel,
    seed: u64,
    method: Method,
    starts: &[Vec<f64>],
    iters: usize,
) -> Result<RunResult, BaselineError> {
    let mut obj = MeteredObjective::new(table, noise, seed);
    for x0 in starts {
        refine(&mut obj, x0, iters)?;
    }
    Ok(obj.finish(method)?)
}

pub fn random_restarts(
    table: &CutTable,
    p: usize,
    cfg: &BaselineConfig,
    noise: NoiseModel,
    seed: u64,
) -> Result<RunResult, BaselineError> {
    let mut r = rng(derive_seed(seed, 0xA11));
    let starts: Vec<Vec<f64>> = (0..cfg.random_restarts)
        .map(|_| (0..2 * p).map(|_| r.random_range(-PI..PI)).collect())
        .collect();
    run_from_starts(
        table,
        noise,
        seed,
        Method::Random,
        &starts,
        cfg.random_iters,
    )
}

/// Coordinatewise median of the training targets.
pub fn median_angles(targets: &[Vec<f64>]) -> Result<Vec<f64>, BaselineError> {
    let d = targets.first().ok_or(BaselineError::NoTargets)?.len();
    Ok((0..d)
        .map(|j| stats::median(&targets.iter().map(|t| t[j]).collect::<Vec<_>>()))
        .collect())
}

/// Two restarts: the median training angles, then the same shifted by the
/// jitter.
pub fn concentration_heuristic(
    table: &CutTable,
    median: &[f64],
    cfg: &BaselineConfig,
    noise: NoiseModel,
    seed: u64,
) -> Result<RunResult, BaselineError> {
    let jittered = median.iter().map(|v| v + cfg.heuristic_jitter).collect();
    run_from_starts(
        table,
        noise,
        seed,
        Method::Heuristic,
        &[median.to_vec(), jittered],
        cfg.heuristic_iters,
    )
}

/// Standardized handcrafted features of the training graphs.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnIndex {
    mean: [f64; 8],
    std: [f64; 8],
    rows: Vec<[f64; 8]>,
    targets: Vec<Vec<f64>>,
}

impl KnnIndex {
    /// Per-dimension standardization over the training set; dimensions with
    /// zero variance are left out of the metric.
    pub fn fit(graphs: &[Graph], targets: &[Vec<f64>]) -> Result<Self, BaselineError> {
        if graphs.is_empty() || graphs.len() != targets.len() {
            return Err(BaselineError::NoTargets);
        }
        let raw: Vec<[f64; 8]> = graphs.iter().map(|g| handcrafted(g).to_array()).collect();
        let mut mean = [0.0; 8];
        let mut std = [0.0; 8];
        for j in 0..8 {
            let col: Vec<f64> = raw.iter().map(|r| r[j]).collect();
            mean[j] = stats::mean(&col);
            std[j] =
                (col.iter().map(|v| (v - mean[j]).powi(2)).sum::<f64>() / col.len() as f64).sqrt();
        }
        let mut idx = KnnIndex {
            mean,
            std,
            rows: Vec::new(),
            targets: targets.to_vec(),
        };
        idx.rows = raw.iter().map(|r| idx.standardize(r)).collect();
        Ok(idx)
    }

    fn standardize(&self, x: &[f64; 8]) -> [f64; 8] {
        let mut out = [0.0; 8];
        for j in 0..8 {
            if self.std[j] > 0.0 {
                out[j] = (x[j] - self.mean[j]) / self.std[j];
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Mean target of the `k` nearest training graphs; ties in distance go
    /// to the lower training index.
    pub fn predict(&self, g: &Graph, k: usize) -> Result<Vec<f64>, BaselineError> {
        if k == 0 || k > self.rows.len() {
            return Err(BaselineError::KTooLarge {
                k,
                available: self.rows.len(),
            });
        }
        let q = self.standardize(&handcrafted(g).to_array());
        let mut d: Vec<(f64, usize)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| (r.iter().zip(&q).map(|(a, b)| (a - b).powi(2)).sum(), i))
            .collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let dim = self.targets[0].len();
        let mut out = vec![0.0; dim];
        for &(_, i) in &d[..k] {
            for (o, t) in out.iter_mut().zip(&self.targets[i]) {
                *o += t / k as f64;
            }
        }
        Ok(out)
    }
}

pub fn knn(
    table: &CutTable,
    g: &Graph,
    index: &KnnIndex,
    cfg: &BaselineConfig,
    noise: NoiseModel,
    seed: u64,
) -> Result<RunResult, BaselineError> {
    let x0 = index.predict(g, cfg.knn_k)?;
    run_from_starts(table, noise, seed, Method::Knn, &[x0], cfg.knn_iters)
}

/// Linear annealing ramp: `gamma_l = (l / p) delta`, `beta_l = (1 - l / p) delta`.
pub fn tqa_angles(p: usize, delta: f64) -> Vec<f64> {
    let gammas = (1..=p).map(|l| l as f64 / p as f64 * delta);
    let betas = (1..=p).map(|l| (1.0 - l as f64 / p as f64) * delta);
    gammas.chain(betas).collect()
}

pub fn tqa(
    table: &CutTable,
    p: usize,
    cfg: &BaselineConfig,
    noise: NoiseModel,
    seed: u64,
) -> Result<RunResult, BaselineError> {
    run_from_starts(
        table,
        noise,
        seed,
        Method::Tqa,
        &[tqa_angles(p, cfg.tqa_delta)],
        cfg.tqa_iters,
    )
}

/// Refines from a point prediction for `gnn_point_factor * t_base` iterations.
pub fn gnn_point(
    table: &CutTable,
    mu: &[f64],
    t_base: usize,
    cfg: &BaselineConfig,
    noise: NoiseModel,
    seed: u64,
) -> Result<RunResult, BaselineError> {
    run_from_starts(
        table,
        noise,
        seed,
        Method::GnnPoint,
        &[mu.to_vec()],
        cfg.gnn_point_factor * t_base,
    )
}

//! Browser demo for depth-one QAOA on small MaxCut graphs.
//!
//! Three operations are exposed to JavaScript: the `(gamma, beta)`
//! landscape of a generated graph, sampling and projection for a Gaussian
//! trust region, and a budgeted trust-region search. The plain Rust
//! functions carry the logic; the `#[wasm_bindgen]` wrappers only convert
//! errors.

use std::f64::consts::PI;

use qaoa_trust::graph::{Family, Graph, GraphError};
use qaoa_trust::predictor::GaussianPrediction;
use qaoa_trust::qaoa::{expectation_flat, CutTable, NoiseModel, QaoaError};
use qaoa_trust::rng::rng;
use qaoa_trust::search::{uq_qaoa_infer, Radius, SearchError, UncertaintyScale, UqConfig};
use qaoa_trust::trust::{TrustError, TrustRegion};
use thiserror::Error;
use wasm_bindgen::prelude::*;

/// Largest graph the page offers; the landscape grid stays interactive.
pub const MAX_NODES: usize = 14;

#[derive(Debug, Error)]
pub enum DemoError {
    #[error("graph: {0}")]
    Graph(#[from] GraphError),
    #[error("simulator: {0}")]
    Qaoa(#[from] QaoaError),
    #[error("trust region: {0}")]
    Trust(#[from] TrustError),
    #[error("search: {0}")]
    Search(#[from] SearchError),
    #[error("n = {0} is outside 4..={MAX_NODES}")]
    Size(usize),
    #[error("grid resolution {0} is outside 2..=128")]
    Resolution(usize),
}

fn js(e: DemoError) -> JsError {
    JsError::new(&e.to_string())
}

/// Gamma axis of the landscape grid.
pub const GAMMA_RANGE: (f64, f64) = (-PI, PI);
/// Beta axis of the landscape grid.
pub const BETA_RANGE: (f64, f64) = (-PI / 2.0, PI / 2.0);

fn axis(range: (f64, f64), res: usize, i: usize) -> f64 {
    range.0 + (range.1 - range.0) * (i as f64 + 0.5) / res as f64
}

/// A generated graph and its cut table.
#[wasm_bindgen]
pub struct Instance {
    graph: Graph,
    table: CutTable,
}

impl Instance {
    pub fn generate(family: &str, n: usize, seed: u64) -> Result<Self, DemoError> {
        if !(4..=MAX_NODES).contains(&n) {
            return Err(DemoError::Size(n));
        }
        let family: Family = family.parse()?;
        let graph = Graph::generate(family, n, seed)?;
        let table = CutTable::new(&graph)?;
        Ok(Instance { graph, table })
    }

    /// `F / C_max` on a `res x res` grid, rows by beta and columns by gamma.
    pub fn ratio_grid(&self, res: usize) -> Result<Vec<f64>, DemoError> {
        if !(2..=128).contains(&res) {
            return Err(DemoError::Resolution(res));
        }
        let c_max = f64::from(self.table.c_max().max(1));
        let mut out = Vec::with_capacity(res * res);
        for i in 0..res {
            let b = axis(BETA_RANGE, res, i);
            for j in 0..res {
                let g = axis(GAMMA_RANGE, res, j);
                out.push(expectation_flat(&self.table, &[g, b])? / c_max);
            }
        }
        Ok(out)
    }

    /// Budgeted search from the Gaussian `N(center, diag(sigma^2))`.
    pub fn run_search(&self, req: &SearchRequest) -> Result<SearchOutcome, DemoError> {
        let pred = GaussianPrediction {
            mu: req.center.to_vec(),
            logvar: req.sigma.iter().map(|s| 2.0 * s.ln()).collect(),
        };
        let config = UqConfig {
            radius: Radius::Chi2 { alpha: req.alpha },
            t_base: req.t_base,
            trust_region: true,
        };
        let scale = UncertaintyScale {
            u_med: req.u_med,
            u_iqr: req.u_iqr,
        };
        let run = uq_qaoa_infer(
            &self.table,
            &pred,
            scale,
            &config,
            NoiseModel::exact(),
            req.seed,
        )?;
        Ok(SearchOutcome {
            trace: run
                .result
                .trace
                .iter()
                .flat_map(|(t, _)| t.clone())
                .collect(),
            seeds: run.seeds.concat(),
            best: run.result.best_theta.clone(),
            evals: run.result.evals_used,
            samples: run.allocation.samples,
            iterations: run.allocation.iterations,
            z: run.allocation.z,
            ratio: run.result.ratio,
        })
    }
}

#[wasm_bindgen]
impl Instance {
    #[wasm_bindgen(constructor)]
    pub fn new(family: &str, n: usize, seed: u64) -> Result<Instance, JsError> {
        Instance::generate(family, n, seed).map_err(js)
    }

    pub fn nodes(&self) -> usize {
        self.graph.n()
    }

    /// Flat `[u0, v0, u1, v1, ...]`.
    pub fn edges(&self) -> Vec<u32> {
        self.graph
            .edges()
            .iter()
            .flat_map(|&(u, v)| [u as u32, v as u32])
            .collect()
    }

    #[wasm_bindgen(js_name = maxCut)]
    pub fn max_cut(&self) -> u32 {
        self.table.c_max()
    }

    pub fn landscape(&self, res: usize) -> Result<Vec<f64>, JsError> {
        self.ratio_grid(res).map_err(js)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn search(
        &self,
        gamma: f64,
        beta: f64,
        sigma_gamma: f64,
        sigma_beta: f64,
        alpha: f64,
        t_base: usize,
        u_med: f64,
        u_iqr: f64,
        seed: u64,
    ) -> Result<SearchOutcome, JsError> {
        let req = SearchRequest {
            center: [gamma, beta],
            sigma: [sigma_gamma, sigma_beta],
            alpha,
            t_base,
            u_med,
            u_iqr,
            seed,
        };
        self.run_search(&req).map_err(js)
    }
}

/// Inputs of [`Instance::run_search`].
#[derive(Debug, Clone, PartialEq)]
pub struct SearchRequest {
    pub center: [f64; 2],
    pub sigma: [f64; 2],
    pub alpha: f64,
    pub t_base: usize,
    pub u_med: f64,
    pub u_iqr: f64,
    pub seed: u64,
}

#[wasm_bindgen]
#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    trace: Vec<f64>,
    seeds: Vec<f64>,
    best: Vec<f64>,
    evals: usize,
    samples: usize,
    iterations: usize,
    z: f64,
    ratio: f64,
}

#[wasm_bindgen]
impl SearchOutcome {
    /// Every evaluated angle pair, flat.
    pub fn trace(&self) -> Vec<f64> {
        self.trace.clone()
    }

    /// The `K` seeds, flat; the first is the center.
    pub fn seeds(&self) -> Vec<f64> {
        self.seeds.clone()
    }

    pub fn best(&self) -> Vec<f64> {
        self.best.clone()
    }

    pub fn evals(&self) -> usize {
        self.evals
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }
}

/// `count` truncated-Gaussian draws, flat, followed by the projection of
/// `point` as the last pair.
pub fn region_points(
    center: [f64; 2],
    sigma: [f64; 2],
    alpha: f64,
    point: [f64; 2],
    count: usize,
    seed: u64,
) -> Result<Vec<f64>, DemoError> {
    let region = TrustRegion::chi2(center.to_vec(), &sigma, alpha)?;
    let mut r = rng(seed);
    let mut out: Vec<f64> = region.sample_truncated(count, &mut r)?.concat();
    out.extend(region.project(&point));
    Ok(out)
}

#[wasm_bindgen(js_name = trustRegion)]
#[allow(clippy::too_many_arguments)]
pub fn trust_region(
    gamma: f64,
    beta: f64,
    sigma_gamma: f64,
    sigma_beta: f64,
    alpha: f64,
    point_gamma: f64,
    point_beta: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<f64>, JsError> {
    region_points(
        [gamma, beta],
        [sigma_gamma, sigma_beta],
        alpha,
        [point_gamma, point_beta],
        count,
        seed,
    )
    .map_err(js)
}

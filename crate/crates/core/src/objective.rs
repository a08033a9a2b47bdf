//! Metered objective shared by every optimizer in the crate.
//!
//! Each call to [`MeteredObjective::eval`] counts as one circuit evaluation
//! and is appended to the run's trace. The meter is owned by a single run.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::qaoa::{
    depolarize, evolve_flat, expectation_flat, expected_ratio, ratio, sample_from, CutTable,
    NoiseModel, QaoaError,
};
use crate::rng::{derive_seed, rng, Rng};

/// Shots used for the closing measurement when objective values are exact.
pub const FINAL_SHOTS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Random,
    Heuristic,
    Knn,
    Tqa,
    GnnPoint,
    UqQaoa,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Random,
        Method::Heuristic,
        Method::Knn,
        Method::Tqa,
        Method::GnnPoint,
        Method::UqQaoa,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Random => "random",
            Method::Heuristic => "heuristic",
            Method::Knn => "knn",
            Method::Tqa => "tqa",
            Method::GnnPoint => "gnn_point",
            Method::UqQaoa => "uq_qaoa",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown method `{s}`"))
    }
}

/// Outcome of one optimization run on one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub method: Method,
    pub evals_used: usize,
    pub best_theta: Vec<f64>,
    pub best_f: f64,
    /// Noise-free `F(best_theta) / C_max`.
    pub ratio: f64,
    /// Best measured cut over `C_max`.
    pub sampled_ratio: f64,
    pub wall_ms: f64,
    pub trace: Vec<(Vec<f64>, f64)>,
}

// wasm32-unknown-unknown has no clock; runs there report zero wall time.
fn clock() -> Option<Instant> {
    if cfg!(target_arch = "wasm32") {
        None
    } else {
        Some(Instant::now())
    }
}

pub struct MeteredObjective<'a> {
    table: &'a CutTable,
    noise: NoiseModel,
    rng: Rng,
    seed: u64,
    trace: Vec<(Vec<f64>, f64)>,
    best_cut: u32,
    started: Option<Instant>,
}

impl<'a> MeteredObjective<'a> {
    pub fn new(table: &'a CutTable, noise: NoiseModel, seed: u64) -> Self {
        MeteredObjective {
            table,
            noise,
            rng: rng(derive_seed(seed, 0x5107)),
            seed,
            trace: Vec::new(),
            best_cut: 0,
            started: clock(),
        }
    }

    pub fn table(&self) -> &CutTable {
        self.table
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    /// One circuit evaluation: the exact (depolarized) expectation, or a shot
    /// estimate when the noise model carries a shot count.
    pub fn eval(&mut self, theta: &[f64]) -> Result<f64, QaoaError> {
        let nu = self.noise.nu(theta.len() / 2);
        let value = match self.noise.shots {
            None => depolarize(expectation_flat(self.table, theta)?, self.table.m(), nu),
            Some(shots) => {
                let psi = evolve_flat(self.table, theta)?;
                let samples = sample_from(&psi.probabilities(), shots as usize, nu, &mut self.rng);
                let mut total = 0u64;
                for z in samples {
                    let c = self.table.cost(z);
                    self.best_cut = self.best_cut.max(c);
                    total += u64::from(c);
                }
                total as f64 / f64::from(shots)
            }
        };
        self.trace.push((theta.to_vec(), value));
        Ok(value)
    }

    pub fn evals(&self) -> usize {
        self.trace.len()
    }

    pub fn trace(&self) -> &[(Vec<f64>, f64)] {
        &self.trace
    }

    /// Closes the run. `ratio` is the exact expectation at the best traced
    /// angles. `sampled_ratio` is the best bitstring from [`FINAL_SHOTS`]
    /// closing shots in exact mode, or the best one already observed in shot
    /// mode. Neither closing step is metered.
    pub fn finish(self, method: Method) -> Result<RunResult, QaoaError> {
        let (best_idx, _) = self.trace.iter().enumerate().fold(
            (None, f64::NEG_INFINITY),
            |(bi, bf), (i, (_, f))| {
                if *f > bf {
                    (Some(i), *f)
                } else {
                    (bi, bf)
                }
            },
        );
        let best_idx = best_idx.ok_or(QaoaError::EmptyTrace)?;
        let (best_theta, best_f) = self.trace[best_idx].clone();
        let best_cut = match self.noise.shots {
            Some(_) => self.best_cut,
            None => {
                let psi = evolve_flat(self.table, &best_theta)?;
                let nu = self.noise.nu(best_theta.len() / 2);
                let mut r = rng(derive_seed(self.seed, 0xF1A1));
                sample_from(&psi.probabilities(), FINAL_SHOTS, nu, &mut r)
                    .into_iter()
                    .map(|z| self.table.cost(z))
                    .max()
                    .unwrap_or(0)
            }
        };
        let expected = expected_ratio(self.table, &best_theta)?;
        Ok(RunResult {
            method,
            evals_used: self.trace.len(),
            best_theta,
            best_f,
            ratio: expected,
            sampled_ratio: ratio(best_cut, self.table.c_max()),
            wall_ms: self
                .started
                .map_or(0.0, |t| t.elapsed().as_secs_f64() * 1e3),
            trace: self.trace,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Family, Graph};

    #[test]
    fn meter_counts_every_call() {
        let g = Graph::generate(Family::Er, 6, 1).unwrap();
        let t = CutTable::new(&g).unwrap();
        let mut obj = MeteredObjective::new(&t, NoiseModel::exact(), 3);
        for k in 0..5 {
            let theta = [0.1 * k as f64, 0.2, 0.3, 0.4];
            let f = obj.eval(&theta).unwrap();
            assert_eq!(f, expectation_flat(&t, &theta).unwrap());
        }
        let res = obj.finish(Method::Random).unwrap();
        assert_eq!(res.evals_used, 5);
        assert_eq!(res.trace.len(), 5);
        let max = res.trace.iter().map(|(_, f)| *f).fold(f64::MIN, f64::max);
        assert_eq!(res.best_f, max);
        assert!((0.0..=1.0).contains(&res.ratio));
    }

    #[test]
    fn shot_mode_is_seeded() {
        let g = Graph::generate(Family::Ba, 8, 1).unwrap();
        let t = CutTable::new(&g).unwrap();
        let run = |seed| {
            let mut obj = MeteredObjective::new(&t, NoiseModel::with_shots(64), seed);
            let f = obj.eval(&[0.3, 0.2, 0.4, 0.1]).unwrap();
            (f, obj.finish(Method::Tqa).unwrap().ratio)
        };
        assert_eq!(run(4), run(4));
    }

    #[test]
    fn empty_run_is_an_error() {
        let g = Graph::generate(Family::Er, 5, 1).unwrap();
        let t = CutTable::new(&g).unwrap();
        let obj = MeteredObjective::new(&t, NoiseModel::exact(), 0);
        assert_eq!(obj.finish(Method::Knn), Err(QaoaError::EmptyTrace));
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
    }
}

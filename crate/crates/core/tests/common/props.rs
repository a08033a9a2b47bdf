//! Trust-region and projected-search properties, shared by the property
//! suite and the acceptance run.

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use qaoa_trust::graph::{Family, Graph};
use qaoa_trust::nelder_mead::{nelder_mead, NelderMeadOptions};
use qaoa_trust::predictor::GaussianPrediction;
use qaoa_trust::qaoa::{CutTable, NoiseModel};
use qaoa_trust::search::{uq_qaoa_infer, UncertaintyScale, UqConfig};
use qaoa_trust::trust::{TrustError, TrustRegion};

pub const CASES: u32 = 10_000;

#[derive(Debug)]
pub struct SearchFailed(pub TrustError);

impl From<TrustError> for SearchFailed {
    fn from(e: TrustError) -> Self {
        SearchFailed(e)
    }
}

pub fn region() -> impl Strategy<Value = TrustRegion> {
    (
        prop::collection::vec(-2.0f64..2.0, 4),
        prop::collection::vec(0.01f64..1.0, 4),
        1.0f64..15.0,
    )
        .prop_map(|(mu, sigma, q)| TrustRegion::new(mu, &sigma, q).unwrap())
}

pub fn point(lo: f64, hi: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(lo..hi, 4)
}

/// A region with a point strictly outside it: the center plus a scaled
/// boundary direction.
pub fn region_and_outside() -> impl Strategy<Value = (TrustRegion, Vec<f64>)> {
    (region(), point(-1.0, 1.0), 1.001f64..6.0)
        .prop_filter("direction must be nonzero", |(_, u, _)| {
            u.iter().map(|v| v * v).sum::<f64>() > 1e-6
        })
        .prop_map(|(region, u, stretch)| {
            let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
            let scale = stretch * region.q().sqrt() / norm;
            let x = region
                .center()
                .iter()
                .zip(region.std())
                .zip(&u)
                .map(|((c, s), d)| c + s * d * scale)
                .collect();
            (region, x)
        })
}

pub fn idempotent(region: &TrustRegion, x: &[f64]) -> Result<(), TestCaseError> {
    let once = region.project(x);
    prop_assert_eq!(region.project(&once), once.clone());
    prop_assert!(region.contains(&once));
    Ok(())
}

pub fn lands_on_boundary(region: &TrustRegion, x: &[f64]) -> Result<(), TestCaseError> {
    prop_assert!(!region.contains(x));
    let y = region.project(x);
    let score = region.mahalanobis_sq(&y);
    prop_assert!(
        (score - region.q()).abs() <= 1e-9,
        "score {} vs q {}",
        score,
        region.q()
    );
    Ok(())
}

/// Every evaluated vertex is feasible and the running best never drops.
pub fn projected_search(
    region: &TrustRegion,
    peak: &[f64],
    x0: &[f64],
    iters: usize,
) -> Result<(), TestCaseError> {
    let mut visited: Vec<Vec<f64>> = Vec::new();
    let mut f = |x: &[f64]| -> Result<f64, SearchFailed> {
        visited.push(x.to_vec());
        Ok(-x
            .iter()
            .zip(peak)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>())
    };
    let res = nelder_mead(
        &mut f,
        x0,
        None,
        Some(region),
        &NelderMeadOptions::with_iters(iters),
    )
    .unwrap();
    prop_assert!(visited.iter().all(|x| region.contains(x)));
    prop_assert!(res.best_so_far.windows(2).all(|w| w[1] >= w[0]));
    prop_assert_eq!(res.best_so_far.len(), res.evals);
    prop_assert!(region.contains(&res.best_theta));
    Ok(())
}

pub fn dominance_case() -> impl Strategy<Value = (u64, Vec<f64>, Vec<f64>, f64)> {
    (
        0u64..1_000_000,
        point(-1.0, 1.0),
        point(-5.0, 0.0),
        0.01f64..0.5,
    )
}

/// The polished output is never worse than the best of its seeds.
pub fn dominates_seeds(
    seed: u64,
    mu: Vec<f64>,
    logvar: Vec<f64>,
    u_med: f64,
) -> Result<(), TestCaseError> {
    let g = Graph::generate(Family::Er, 5, seed % 64).unwrap();
    let table = CutTable::new(&g).unwrap();
    let pred = GaussianPrediction { mu, logvar };
    let scale = UncertaintyScale { u_med, u_iqr: 0.05 };
    let cfg = UqConfig {
        t_base: 6,
        ..UqConfig::default()
    };
    let run = uq_qaoa_infer(&table, &pred, scale, &cfg, NoiseModel::exact(), seed).unwrap();
    let best_seed = run
        .seed_values
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    prop_assert!(run.result.best_f >= best_seed);
    let region = TrustRegion::chi2(pred.mu.clone(), &pred.std(), 0.95).unwrap();
    prop_assert!(run.result.trace.iter().all(|(x, _)| region.contains(x)));
    prop_assert_eq!(run.result.trace.len(), run.result.evals_used);
    Ok(())
}

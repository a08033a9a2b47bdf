//! Nelder-Mead simplex search (maximizing), optionally confined to a trust
//! region by projecting every proposed vertex before it is evaluated.

use crate::trust::{TrustError, TrustRegion};

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

pub const X_ATOL: f64 = 1e-4;
pub const F_ATOL: f64 = 1e-6;
/// Axis step of the starting simplex without a region.
pub const DEFAULT_STEP: f64 = 0.1;
/// Axis step, in units of the per-axis scale, when a region is supplied.
pub const REGION_STEP_FRACTION: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct NelderMeadOptions {
    pub max_iters: usize,
    pub x_atol: f64,
    pub f_atol: f64,
    /// Per-axis offsets of the starting simplex. Empty means
    /// [`DEFAULT_STEP`], or [`REGION_STEP_FRACTION`] times the region scale.
    pub steps: Vec<f64>,
}

impl NelderMeadOptions {
    pub fn with_iters(max_iters: usize) -> Self {
        NelderMeadOptions {
            max_iters,
            x_atol: X_ATOL,
            f_atol: F_ATOL,
            steps: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    pub best_theta: Vec<f64>,
    pub best_f: f64,
    /// Objective calls made by this search.
    pub evals: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Best value seen after each objective call.
    pub best_so_far: Vec<f64>,
}

struct Search<'a, F> {
    objective: &'a mut F,
    region: Option<&'a TrustRegion>,
    evals: usize,
    best: (Vec<f64>, f64),
    best_so_far: Vec<f64>,
}

impl<F, E> Search<'_, F>
where
    F: FnMut(&[f64]) -> Result<f64, E>,
    E: From<TrustError>,
{
    /// Projects, evaluates and returns the negated value (we minimize).
    fn eval(&mut self, x: Vec<f64>) -> Result<(Vec<f64>, f64), E> {
        let x = match self.region {
            Some(r) => r.project(&x),
            None => x,
        };
        let f = (self.objective)(&x)?;
        if !f.is_finite() {
            return Err(TrustError::NonFinite(x).into());
        }
        self.record(&x, f);
        Ok((x, -f))
    }

    fn record(&mut self, x: &[f64], f: f64) {
        if f > self.best.1 {
            self.best = (x.to_vec(), f);
        }
        self.best_so_far.push(self.best.1);
    }
}

fn lin(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    // a + t (a - b)
    a.iter().zip(b).map(|(x, y)| x + t * (x - y)).collect()
}

/// Maximizes `objective` from `x0`.
///
/// `x0_value`, when given, is the already-known objective at `x0` and saves
/// one call. With a `region`, `x0` and every later vertex are projected into
/// it before evaluation. Stops after `max_iters` simplex iterations or when
/// both the vertex spread and the value spread fall below the tolerances.
pub fn nelder_mead<F, E>(
    objective: &mut F,
    x0: &[f64],
    x0_value: Option<f64>,
    region: Option<&TrustRegion>,
    opts: &NelderMeadOptions,
) -> Result<NelderMeadResult, E>
where
    F: FnMut(&[f64]) -> Result<f64, E>,
    E: From<TrustError>,
{
    let d = x0.len();
    let steps: Vec<f64> = if !opts.steps.is_empty() {
        assert_eq!(opts.steps.len(), d, "one simplex step per coordinate");
        opts.steps.clone()
    } else if let Some(r) = region {
        r.std().iter().map(|s| REGION_STEP_FRACTION * s).collect()
    } else {
        vec![DEFAULT_STEP; d]
    };

    let mut s = Search {
        objective,
        region,
        evals: 0,
        best: (x0.to_vec(), f64::NEG_INFINITY),
        best_so_far: Vec::new(),
    };

    let mut sim: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    let start = match region {
        Some(r) => r.project(x0),
        None => x0.to_vec(),
    };
    match x0_value {
        Some(f) if start == x0 => {
            s.best = (start.clone(), f);
            sim.push((start.clone(), -f));
        }
        _ => {
            let v = s.eval(start.clone())?;
            s.evals += 1;
            sim.push(v);
        }
    }
    for j in 0..d {
        let mut x = start.clone();
        x[j] += steps[j];
        let v = s.eval(x)?;
        s.evals += 1;
        sim.push(v);
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iters {
        sim.sort_by(|a, b| a.1.total_cmp(&b.1));
        let x_spread = sim[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&sim[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        let f_spread = sim[1..]
            .iter()
            .map(|(_, f)| (f - sim[0].1).abs())
            .fold(0.0, f64::max);
        if x_spread <= opts.x_atol && f_spread <= opts.f_atol {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; d];
        for (x, _) in &sim[..d] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / d as f64;
            }
        }
        let worst = sim[d].clone();

        let (xr, fr) = s.eval(lin(&centroid, &worst.0, REFLECT))?;
        s.evals += 1;
        if fr < sim[0].1 {
            let (xe, fe) = s.eval(lin(&centroid, &worst.0, REFLECT * EXPAND))?;
            s.evals += 1;
            sim[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < sim[d - 1].1 {
            sim[d] = (xr, fr);
            continue;
        }
        let shrink = if fr < worst.1 {
            let (xc, fc) = s.eval(lin(&centroid, &worst.0, CONTRACT * REFLECT))?;
            s.evals += 1;
            if fc <= fr {
                sim[d] = (xc, fc);
                false
            } else {
                true
            }
        } else {
            let (xcc, fcc) = s.eval(lin(&centroid, &worst.0, -CONTRACT))?;
            s.evals += 1;
            if fcc < worst.1 {
                sim[d] = (xcc, fcc);
                false
            } else {
                true
            }
        };
        if shrink {
            let best = sim[0].0.clone();
            for vertex in sim.iter_mut().skip(1) {
                let x: Vec<f64> = best
                    .iter()
                    .zip(&vertex.0)
                    .map(|(b, v)| b + SHRINK * (v - b))
                    .collect();
                *vertex = s.eval(x)?;
                s.evals += 1;
            }
        }
    }

    Ok(NelderMeadResult {
        best_theta: s.best.0,
        best_f: s.best.1,
        evals: s.evals,
        iterations,
        converged,
        best_so_far: s.best_so_far,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad(c: &[f64]) -> impl FnMut(&[f64]) -> Result<f64, TrustError> + '_ {
        move |x: &[f64]| Ok(-x.iter().zip(c).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
    }

    #[test]
    fn finds_quadratic_peak() {
        let c = [0.3, -0.2, 0.5, 0.1];
        let mut f = quad(&c);
        let res = nelder_mead(
            &mut f,
            &[0.2, -0.1, 0.4, 0.0],
            None,
            None,
            &NelderMeadOptions::with_iters(500),
        )
        .unwrap();
        for (x, y) in res.best_theta.iter().zip(&c) {
            assert!((x - y).abs() < 1e-3);
        }
        assert!(res.evals < 200, "used {} evals", res.evals);
        assert!(res.converged);
    }

    #[test]
    fn best_so_far_is_monotone() {
        let c = [1.0, 2.0];
        let mut f = quad(&c);
        let res = nelder_mead(
            &mut f,
            &[0.0, 0.0],
            None,
            None,
            &NelderMeadOptions::with_iters(40),
        )
        .unwrap();
        assert_eq!(res.best_so_far.len(), res.evals);
        assert!(res.best_so_far.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn known_start_value_saves_a_call() {
        let c = [1.0, 2.0];
        let mut f = quad(&c);
        let f0 = f(&[0.0, 0.0]).unwrap();
        let a = nelder_mead(
            &mut f,
            &[0.0, 0.0],
            Some(f0),
            None,
            &NelderMeadOptions::with_iters(0),
        )
        .unwrap();
        assert_eq!(a.evals, 2);
        let b = nelder_mead(
            &mut f,
            &[0.0, 0.0],
            None,
            None,
            &NelderMeadOptions::with_iters(0),
        )
        .unwrap();
        assert_eq!(b.evals, 3);
    }

    #[test]
    fn projected_search_stays_inside() {
        let region = TrustRegion::new(vec![0.0, 0.0], &[0.2, 0.1], 1.0).unwrap();
        let mut seen = Vec::new();
        let mut f = |x: &[f64]| -> Result<f64, TrustError> {
            seen.push(x.to_vec());
            Ok(-((x[0] - 1.0).powi(2) + (x[1] - 1.0).powi(2)))
        };
        let res = nelder_mead(
            &mut f,
            &[0.0, 0.0],
            None,
            Some(&region),
            &NelderMeadOptions::with_iters(300),
        )
        .unwrap();
        assert!(seen.iter().all(|x| region.contains(x)));
        assert!((region.mahalanobis_sq(&res.best_theta) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn non_finite_objective_is_an_error() {
        let mut f = |_: &[f64]| -> Result<f64, TrustError> { Ok(f64::NAN) };
        let err = nelder_mead(
            &mut f,
            &[0.0],
            None,
            None,
            &NelderMeadOptions::with_iters(3),
        )
        .unwrap_err();
        assert!(matches!(err, TrustError::NonFinite(_)));
    }
}

//! Reference angles: best of several unconstrained Nelder-Mead runs on the
//! exact simulator, reduced to one representative of the symmetry class.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng as _;

use crate::nelder_mead::{nelder_mead, NelderMeadOptions};
use crate::qaoa::{expectation_flat, CutTable};
use crate::rng::{derive_seed, rng};
use crate::search::SearchError;

/// Wraps `x` into `(-period/2, period/2]`.
fn wrap(x: f64, period: f64) -> f64 {
    let mut y = x.rem_euclid(period);
    if y > period / 2.0 {
        y -= period;
    }
    y
}

/// Extra `gamma` symmetry fixed by the degree parities of the graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaSymmetry {
    /// Only the generic `2 pi` period.
    None,
    /// Every degree odd: `gamma_l -> gamma_l + pi` together with
    /// `beta_k -> -beta_k` for all `k >= l`.
    OddDegrees,
    /// Every degree even: `gamma_l -> gamma_l + pi`.
    EvenDegrees,
}

impl GammaSymmetry {
    /// Read off the cut values: with all degrees odd, `C(z)` has the parity
    /// of the popcount of `z`; with all degrees even it is always even.
    pub fn of(table: &CutTable) -> Self {
        let costs = table.costs();
        if table.m() > 0
            && costs
                .iter()
                .enumerate()
                .all(|(z, c)| (c ^ z.count_ones()) & 1 == 0)
        {
            GammaSymmetry::OddDegrees
        } else if costs.iter().all(|c| c & 1 == 0) {
            GammaSymmetry::EvenDegrees
        } else {
            GammaSymmetry::None
        }
    }
}

/// Picks the representative of `theta` under the symmetries of unweighted
/// MaxCut QAOA: `beta_l -> beta_l + pi/2`, `gamma_l -> gamma_l + 2 pi`,
/// `theta -> -theta`, and the parity symmetry `sym`. The result has every
/// `beta_l` in `(-pi/4, pi/4]`, every `gamma_l` in `(-pi, pi]` (or
/// `(-pi/2, pi/2]` under a parity symmetry), and `gamma_1 >= 0`.
pub fn canonicalize(theta: &[f64], sym: GammaSymmetry) -> Vec<f64> {
    let p = theta.len() / 2;
    let reduce = |t: &[f64]| -> Vec<f64> {
        let mut r: Vec<f64> = t[..p]
            .iter()
            .map(|&g| wrap(g, 2.0 * PI))
            .chain(t[p..].iter().copied())
            .collect();
        if sym != GammaSymmetry::None {
            for l in 0..p {
                let shift = wrap(r[l], PI) - r[l];
                if shift != 0.0 {
                    r[l] += shift;
                    if sym == GammaSymmetry::OddDegrees {
                        for b in &mut r[p + l..] {
                            *b = -*b;
                        }
                    }
                }
            }
        }
        for b in &mut r[p..] {
            *b = wrap(*b, FRAC_PI_2);
        }
        r
    };
    let r = reduce(theta);
    if r[0] < 0.0 {
        reduce(&r.iter().map(|x| -x).collect::<Vec<_>>())
    } else {
        r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Target {
    pub theta: Vec<f64>,
    pub value: f64,
    pub evals: usize,
}

/// Best of `restarts` runs; the first starts at the origin, the rest at
/// uniform draws from `[-pi, pi]^{2p}`. With `canonical`, the winner is
/// reduced by [`canonicalize`]; otherwise it is stored as found.
pub fn find_target(
    table: &CutTable,
    p: usize,
    restarts: usize,
    iters: usize,
    canonical: bool,
    seed: u64,
) -> Result<Target, SearchError> {
    let mut r = rng(derive_seed(seed, 0x7A26));
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut evals = 0;
    for k in 0..restarts {
        let x0: Vec<f64> = if k == 0 {
            vec![0.0; 2 * p]
        } else {
            (0..2 * p).map(|_| r.random_range(-PI..PI)).collect()
        };
        let mut f = |x: &[f64]| expectation_flat(table, x).map_err(SearchError::from);
        let res = nelder_mead(
            &mut f,
            &x0,
            None,
            None,
            &NelderMeadOptions::with_iters(iters),
        )?;
        evals += res.evals;
        if best.as_ref().is_none_or(|b| res.best_f > b.1) {
            best = Some((res.best_theta, res.best_f));
        }
    }
    let (theta, _) = best.ok_or(SearchError::Invalid("no restarts".into()))?;
    let theta = if canonical {
        canonicalize(&theta, GammaSymmetry::of(table))
    } else {
        theta
    };
    // re-evaluated so the stored value matches the stored angles exactly
    let value = expectation_flat(table, &theta)?;
    Ok(Target {
        theta,
        value,
        evals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Family, Graph};

    #[test]
    fn canonical_form_preserves_the_objective() {
        let ring = Graph::new(6, (0..6).map(|i| (i, (i + 1) % 6)), Family::Ws, 0).unwrap();
        let cases = [
            (
                Graph::new(5, [(0, 1), (0, 2), (1, 2), (2, 3), (3, 4)], Family::Er, 0).unwrap(),
                GammaSymmetry::None,
            ),
            (
                Graph::generate(Family::Reg3, 8, 5).unwrap(),
                GammaSymmetry::OddDegrees,
            ),
            (ring, GammaSymmetry::EvenDegrees),
        ];
        for (g, sym) in cases {
            let t = CutTable::new(&g).unwrap();
            assert_eq!(GammaSymmetry::of(&t), sym);
            let bound = if sym == GammaSymmetry::None {
                PI
            } else {
                FRAC_PI_2
            };
            for theta in [
                [-2.9, 4.0, 1.3, -0.9],
                [0.4, -0.7, 2.2, 0.1],
                [-0.3, 0.2, -0.1, 0.5],
                [2.0, 1.9, 0.3, 0.2],
            ] {
                let c = canonicalize(&theta, sym);
                let a = expectation_flat(&t, &theta).unwrap();
                let b = expectation_flat(&t, &c).unwrap();
                assert!((a - b).abs() < 1e-10, "{sym:?}: {theta:?} -> {c:?}");
                assert!(c[0] >= 0.0);
                assert!(c[..2].iter().all(|g| g.abs() <= bound + 1e-12));
                assert!(c[2..].iter().all(|b| b.abs() <= PI / 4.0 + 1e-12));
                assert_eq!(canonicalize(&c, sym), c);
            }
        }
    }

    #[test]
    fn single_edge_target_is_near_optimal() {
        let g = Graph::new(2, [(0, 1)], Family::Er, 0).unwrap();
        let t = CutTable::new(&g).unwrap();
        let target = find_target(&t, 2, 8, 400, true, 1).unwrap();
        assert!(target.value >= 0.99 * t.c_max() as f64);
    }

    #[test]
    fn target_dominates_the_origin() {
        let g = Graph::generate(Family::Ba, 8, 4).unwrap();
        let t = CutTable::new(&g).unwrap();
        let target = find_target(&t, 2, 2, 100, true, 3).unwrap();
        assert!(target.value >= g.m() as f64 / 2.0);
        assert_eq!(find_target(&t, 2, 2, 100, true, 3).unwrap(), target);
    }
}

//! Dense-matrix reference for the statevector simulator.

use num_complex::Complex64 as C;
use qaoa_trust::graph::{Family, Graph};

type Mat = Vec<Vec<C>>;

fn identity(d: usize) -> Mat {
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    if i == j {
                        C::new(1.0, 0.0)
                    } else {
                        C::new(0.0, 0.0)
                    }
                })
                .collect()
        })
        .collect()
}

fn mul(a: &Mat, b: &Mat) -> Mat {
    let d = a.len();
    let mut out = vec![vec![C::new(0.0, 0.0); d]; d];
    for i in 0..d {
        for k in 0..d {
            for j in 0..d {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

/// Dense `exp(A)` by scaling and squaring a 30-term Taylor series.
fn expm(a: &Mat) -> Mat {
    let d = a.len();
    let norm: f64 = a
        .iter()
        .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let s = (norm.max(1.0).log2().ceil() as i32 + 1).max(0);
    let scale = 0.5f64.powi(s);
    let a: Mat = a
        .iter()
        .map(|r| r.iter().map(|z| z * scale).collect())
        .collect();
    let mut result = identity(d);
    let mut term = identity(d);
    for k in 1..30 {
        term = mul(&term, &a);
        for row in term.iter_mut() {
            for z in row.iter_mut() {
                *z /= k as f64;
            }
        }
        for i in 0..d {
            for j in 0..d {
                result[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..s {
        result = mul(&result, &result);
    }
    result
}

/// `<C>` from dense cost and mixer Hamiltonians built directly from the
/// edge list.
pub fn oracle_expectation(g: &Graph, theta: &[f64]) -> f64 {
    let n = g.n();
    let d = 1usize << n;
    let cost: Vec<f64> = (0..d)
        .map(|z| {
            g.edges()
                .iter()
                .filter(|&&(i, j)| (z >> i & 1) != (z >> j & 1))
                .count() as f64
        })
        .collect();
    let mut b = vec![vec![C::new(0.0, 0.0); d]; d];
    for z in 0..d {
        for q in 0..n {
            b[z][z ^ (1 << q)] += C::new(1.0, 0.0);
        }
    }
    let p = theta.len() / 2;
    let mut psi: Vec<C> = vec![C::new(1.0 / (d as f64).sqrt(), 0.0); d];
    for l in 0..p {
        let hc: Mat = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| {
                        if i == j {
                            C::new(0.0, -theta[l] * cost[i])
                        } else {
                            C::new(0.0, 0.0)
                        }
                    })
                    .collect()
            })
            .collect();
        let hb: Mat = b
            .iter()
            .map(|r| r.iter().map(|z| z * C::new(0.0, -theta[p + l])).collect())
            .collect();
        for u in [expm(&hc), expm(&hb)] {
            psi = (0..d)
                .map(|i| (0..d).map(|j| u[i][j] * psi[j]).sum())
                .collect();
        }
    }
    psi.iter().zip(&cost).map(|(a, c)| a.norm_sqr() * c).sum()
}

pub fn all_small_graphs() -> Vec<Graph> {
    let mut out = Vec::new();
    for n in 1..=3usize {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        for mask in 0..(1usize << pairs.len()) {
            let edges = pairs
                .iter()
                .enumerate()
                .filter(|(b, _)| mask >> b & 1 == 1)
                .map(|(_, e)| *e);
            out.push(Graph::new(n, edges, Family::Er, 0).unwrap());
        }
    }
    out
}

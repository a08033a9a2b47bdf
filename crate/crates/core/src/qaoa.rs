//! Exact statevector simulation of depth-p MaxCut QAOA.
//!
//! Basis index bit `i` is the spin of vertex `i`. The cost layer is a
//! diagonal phase read from a precomputed [`CutTable`]; the mixer is applied
//! as one 2x2 rotation per qubit, which is exact for this ansatz.

use num_complex::Complex64;
use rand::Rng as _;
use thiserror::Error;

use crate::graph::{Graph, MAX_VERTICES};
use crate::rng::{rng, Rng};

#[derive(Debug, Error, PartialEq)]
pub enum QaoaError {
    #[error("graph has {0} vertices; exhaustive simulation supports at most {MAX_VERTICES}")]
    TooLarge(usize),
    #[error("angle vector must have even length 2p with p >= 1, got {0}")]
    BadLength(usize),
    #[error("non-finite angle at index {0}")]
    NonFinite(usize),
    #[error("empty evaluation trace")]
    EmptyTrace,
    #[error("noise strength {0} outside [0, 1]")]
    BadEpsilon(f64),
}

/// QAOA angles `(gamma_1..gamma_p, beta_1..beta_p)` in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct Angles {
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
}

impl Angles {
    pub fn new(gammas: Vec<f64>, betas: Vec<f64>) -> Result<Self, QaoaError> {
        if gammas.len() != betas.len() || gammas.is_empty() {
            return Err(QaoaError::BadLength(gammas.len() + betas.len()));
        }
        let a = Angles { gammas, betas };
        if let Some(i) = a.to_flat().iter().position(|x| !x.is_finite()) {
            return Err(QaoaError::NonFinite(i));
        }
        Ok(a)
    }

    pub fn zeros(p: usize) -> Self {
        Angles {
            gammas: vec![0.0; p],
            betas: vec![0.0; p],
        }
    }

    pub fn from_flat(theta: &[f64]) -> Result<Self, QaoaError> {
        check_flat(theta)?;
        let p = theta.len() / 2;
        Ok(Angles {
            gammas: theta[..p].to_vec(),
            betas: theta[p..].to_vec(),
        })
    }

    pub fn p(&self) -> usize {
        self.gammas.len()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.gammas.iter().chain(&self.betas).copied().collect()
    }
}

fn check_flat(theta: &[f64]) -> Result<(), QaoaError> {
    if theta.is_empty() || theta.len() % 2 != 0 {
        return Err(QaoaError::BadLength(theta.len()));
    }
    if let Some(i) = theta.iter().position(|x| !x.is_finite()) {
        return Err(QaoaError::NonFinite(i));
    }
    Ok(())
}

/// Cut value of every bitstring.
#[derive(Debug, Clone, PartialEq)]
pub struct CutTable {
    n: usize,
    m: usize,
    costs: Vec<u32>,
    c_max: u32,
}

impl CutTable {
    pub fn new(g: &Graph) -> Result<Self, QaoaError> {
        let n = g.n();
        if n > MAX_VERTICES {
            return Err(QaoaError::TooLarge(n));
        }
        let dim = 1usize << n;
        let mut costs = vec![0u32; dim];
        for &(i, j) in g.edges() {
            for (z, c) in costs.iter_mut().enumerate() {
                *c += (((z >> i) ^ (z >> j)) & 1) as u32;
            }
        }
        let c_max = costs.iter().copied().max().unwrap_or(0);
        Ok(CutTable {
            n,
            m: g.m(),
            costs,
            c_max,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn costs(&self) -> &[u32] {
        &self.costs
    }

    pub fn c_max(&self) -> u32 {
        self.c_max
    }

    pub fn cost(&self, z: usize) -> u32 {
        self.costs[z]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    pub n: usize,
    pub amplitudes: Vec<Complex64>,
}

impl Statevector {
    pub fn uniform(n: usize) -> Self {
        let dim = 1usize << n;
        let a = 1.0 / (dim as f64).sqrt();
        Statevector {
            n,
            amplitudes: vec![Complex64::new(a, 0.0); dim],
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }
}

fn apply_cost_phase(state: &mut [Complex64], costs: &[u32], m: usize, gamma: f64) {
    let phases: Vec<Complex64> = (0..=m)
        .map(|c| Complex64::from_polar(1.0, -gamma * c as f64))
        .collect();
    for (a, &c) in state.iter_mut().zip(costs) {
        *a *= phases[c as usize];
    }
}

/// `exp(-i beta X)` on every qubit.
fn apply_mixer(state: &mut [Complex64], n: usize, beta: f64) {
    let (s, c) = beta.sin_cos();
    for q in 0..n {
        let bit = 1usize << q;
        for block in state.chunks_exact_mut(2 * bit) {
            let (lo, hi) = block.split_at_mut(bit);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (ar, ai, br, bi) = (a.re, a.im, b.re, b.im);
                // c*a - i s*b and -i s*a + c*b
                *a = Complex64::new(c * ar + s * bi, c * ai - s * br);
                *b = Complex64::new(c * br + s * ai, c * bi - s * ar);
            }
        }
    }
}

/// Prepares the depth-p state for flat angles `theta`.
pub fn evolve_flat(table: &CutTable, theta: &[f64]) -> Result<Statevector, QaoaError> {
    check_flat(theta)?;
    let p = theta.len() / 2;
    let mut psi = Statevector::uniform(table.n);
    for l in 0..p {
        apply_cost_phase(&mut psi.amplitudes, &table.costs, table.m, theta[l]);
        apply_mixer(&mut psi.amplitudes, table.n, theta[p + l]);
    }
    Ok(psi)
}

pub fn evolve(table: &CutTable, theta: &Angles) -> Statevector {
    evolve_flat(table, &theta.to_flat()).expect("Angles are validated at construction")
}

fn cost_expectation(table: &CutTable, psi: &Statevector) -> f64 {
    psi.amplitudes
        .iter()
        .zip(&table.costs)
        .map(|(a, &c)| c as f64 * a.norm_sqr())
        .sum()
}

/// `F(theta) = <theta| C |theta>`.
///
/// The state is invariant under flipping every spin, so only the half with
/// the top vertex at 0 is simulated; the amplitude of `z` with the top bit
/// set equals that of its complement.
pub fn expectation_flat(table: &CutTable, theta: &[f64]) -> Result<f64, QaoaError> {
    check_flat(theta)?;
    if table.n < 2 {
        return Ok(cost_expectation(table, &evolve_flat(table, theta)?));
    }
    let p = theta.len() / 2;
    let half = 1usize << (table.n - 1);
    let a = 1.0 / ((2 * half) as f64).sqrt();
    let mut psi = vec![Complex64::new(a, 0.0); half];
    let costs = &table.costs[..half];
    for l in 0..p {
        apply_cost_phase(&mut psi, costs, table.m, theta[l]);
        apply_mixer(&mut psi, table.n - 1, theta[p + l]);
        apply_top_mixer(&mut psi, theta[p + l]);
    }
    Ok(2.0
        * psi
            .iter()
            .zip(costs)
            .map(|(a, &c)| c as f64 * a.norm_sqr())
            .sum::<f64>())
}

/// Mixer on the top qubit in the complement-reduced representation: it
/// couples `z` with `!z` restricted to the lower bits.
fn apply_top_mixer(half: &mut [Complex64], beta: f64) {
    let (s, c) = beta.sin_cos();
    let len = half.len();
    let (lo, hi) = half.split_at_mut(len / 2);
    for (a, b) in lo.iter_mut().zip(hi.iter_mut().rev()) {
        let (ar, ai, br, bi) = (a.re, a.im, b.re, b.im);
        *a = Complex64::new(c * ar + s * bi, c * ai - s * br);
        *b = Complex64::new(c * br + s * ai, c * bi - s * ar);
    }
}

pub fn expectation(table: &CutTable, theta: &Angles) -> f64 {
    expectation_flat(table, &theta.to_flat()).expect("Angles are validated at construction")
}

/// Global depolarizing noise of per-layer strength `epsilon`, and optionally
/// finite-shot estimation of every objective value.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseModel {
    pub epsilon: f64,
    pub shots: Option<u32>,
}

impl NoiseModel {
    pub fn exact() -> Self {
        NoiseModel::default()
    }

    pub fn with_shots(shots: u32) -> Self {
        NoiseModel {
            epsilon: 0.0,
            shots: Some(shots),
        }
    }

    pub fn validate(&self) -> Result<(), QaoaError> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(QaoaError::BadEpsilon(self.epsilon));
        }
        Ok(())
    }

    /// Total mixing weight `1 - (1 - epsilon)^(2p)`.
    pub fn nu(&self, p: usize) -> f64 {
        1.0 - (1.0 - self.epsilon).powi(2 * p as i32)
    }
}

/// `(1 - nu) F + nu m / 2`: the exact objective under global depolarizing.
pub fn noisy_expectation(
    table: &CutTable,
    theta: &[f64],
    noise: &NoiseModel,
) -> Result<f64, QaoaError> {
    noise.validate()?;
    let f = expectation_flat(table, theta)?;
    Ok(depolarize(f, table.m, noise.nu(theta.len() / 2)))
}

pub fn depolarize(f: f64, m: usize, nu: f64) -> f64 {
    (1.0 - nu) * f + nu * m as f64 / 2.0
}

/// Draws `shots` basis states from `probs`; with probability `nu` a shot is
/// replaced by a uniformly random bitstring (the depolarized part).
pub fn sample_from(probs: &[f64], shots: usize, nu: f64, r: &mut Rng) -> Vec<usize> {
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for &p in probs {
        acc += p;
        cdf.push(acc);
    }
    let total = acc;
    let dim = probs.len();
    (0..shots)
        .map(|_| {
            if nu > 0.0 && r.random::<f64>() < nu {
                return r.random_range(0..dim);
            }
            let u = r.random::<f64>() * total;
            cdf.partition_point(|&c| c <= u).min(dim - 1)
        })
        .collect()
}

pub fn sample_bitstrings(
    table: &CutTable,
    theta: &[f64],
    shots: usize,
    seed: u64,
) -> Result<Vec<usize>, QaoaError> {
    let psi = evolve_flat(table, theta)?;
    Ok(sample_from(
        &psi.probabilities(),
        shots,
        0.0,
        &mut rng(seed),
    ))
}

/// Mean cut value over sampled bitstrings.
pub fn shot_estimate(table: &CutTable, samples: &[usize]) -> f64 {
    samples.iter().map(|&z| table.cost(z) as f64).sum::<f64>() / samples.len() as f64
}

/// Best `C(z) / C_max` over `shots` measurements at each angle vector in
/// `trace`.
pub fn best_sampled_ratio(
    trace: &[Vec<f64>],
    table: &CutTable,
    shots: usize,
    seed: u64,
) -> Result<f64, QaoaError> {
    if trace.is_empty() {
        return Err(QaoaError::EmptyTrace);
    }
    let mut r = rng(seed);
    let mut best = 0;
    for theta in trace {
        let psi = evolve_flat(table, theta)?;
        for z in sample_from(&psi.probabilities(), shots, 0.0, &mut r) {
            best = best.max(table.cost(z));
        }
    }
    Ok(ratio(best, table.c_max))
}

/// Noise-free `F(theta) / C_max`.
pub fn expected_ratio(table: &CutTable, theta: &[f64]) -> Result<f64, QaoaError> {
    if table.c_max == 0 {
        return Ok(1.0);
    }
    Ok(expectation_flat(table, theta)? / f64::from(table.c_max))
}

pub fn ratio(cut: u32, c_max: u32) -> f64 {
    if c_max == 0 {
        1.0
    } else {
        cut as f64 / c_max as f64
    }
}

pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Central-difference gradient of `F`.
pub fn finite_diff_gradient(
    table: &CutTable,
    theta: &[f64],
    h: f64,
) -> Result<Vec<f64>, QaoaError> {
    check_flat(theta)?;
    let mut x = theta.to_vec();
    let mut grad = vec![0.0; theta.len()];
    for j in 0..theta.len() {
        x[j] = theta[j] + h;
        let fp = expectation_flat(table, &x)?;
        x[j] = theta[j] - h;
        let fm = expectation_flat(table, &x)?;
        x[j] = theta[j];
        grad[j] = (fp - fm) / (2.0 * h);
    }
    Ok(grad)
}

/// Central-difference Hessian of `F`, row-major `2p * 2p`.
pub fn finite_diff_hessian(table: &CutTable, theta: &[f64], h: f64) -> Result<Vec<f64>, QaoaError> {
    check_flat(theta)?;
    let d = theta.len();
    let f = |x: &[f64]| expectation_flat(table, x);
    let f0 = f(theta)?;
    let mut hess = vec![0.0; d * d];
    let mut x = theta.to_vec();
    for i in 0..d {
        x[i] = theta[i] + h;
        let fp = f(&x)?;
        x[i] = theta[i] - h;
        let fm = f(&x)?;
        x[i] = theta[i];
        hess[i * d + i] = (fp - 2.0 * f0 + fm) / (h * h);
        for j in (i + 1)..d {
            let mut corner = |si: f64, sj: f64| {
                x[i] = theta[i] + si * h;
                x[j] = theta[j] + sj * h;
                let v = f(&x);
                x[i] = theta[i];
                x[j] = theta[j];
                v
            };
            let v = (corner(1.0, 1.0)? - corner(1.0, -1.0)? - corner(-1.0, 1.0)?
                + corner(-1.0, -1.0)?)
                / (4.0 * h * h);
            hess[i * d + j] = v;
            hess[j * d + i] = v;
        }
    }
    Ok(hess)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Family;

    #[test]
    fn reduced_simulation_matches_full_state() {
        for (i, family) in Family::ALL.into_iter().enumerate() {
            let g = Graph::generate(family, 6 + 2 * i, i as u64).unwrap();
            let t = CutTable::new(&g).unwrap();
            for theta in [[0.3, -0.8, 0.45, 1.1], [2.0, 0.1, -0.3, 0.7]] {
                let full = cost_expectation(&t, &evolve_flat(&t, &theta).unwrap());
                assert!((expectation_flat(&t, &theta).unwrap() - full).abs() < 1e-12);
            }
        }
        let t = CutTable::new(&edge()).unwrap();
        let full = cost_expectation(&t, &evolve_flat(&t, &[0.4, 0.9]).unwrap());
        assert!((expectation_flat(&t, &[0.4, 0.9]).unwrap() - full).abs() < 1e-14);
    }

    fn edge() -> Graph {
        Graph::new(2, [(0, 1)], Family::Er, 0).unwrap()
    }

    fn complete(n: usize) -> Graph {
        let e = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j)));
        Graph::new(n, e, Family::Er, 0).unwrap()
    }

    #[test]
    fn cut_tables() {
        let t = CutTable::new(&edge()).unwrap();
        assert_eq!(t.costs(), &[0, 1, 1, 0]);
        assert_eq!(t.c_max(), 1);
        assert_eq!(CutTable::new(&complete(3)).unwrap().c_max(), 2);
        assert_eq!(CutTable::new(&complete(4)).unwrap().c_max(), 4);
    }

    #[test]
    fn complement_symmetry() {
        let g = Graph::generate(Family::Ba, 9, 4).unwrap();
        let t = CutTable::new(&g).unwrap();
        let mask = (1usize << 9) - 1;
        for z in 0..t.costs().len() {
            assert_eq!(t.cost(z), t.cost(!z & mask));
            assert!(t.cost(z) as usize <= g.m());
        }
    }

    #[test]
    fn zero_angles_leave_uniform_state() {
        let t = CutTable::new(&complete(3)).unwrap();
        let psi = evolve(&t, &Angles::zeros(2));
        assert_eq!(psi, Statevector::uniform(3));
    }

    #[test]
    fn trivial_points_give_half_the_edges() {
        let g = Graph::generate(Family::Er, 8, 1).unwrap();
        let t = CutTable::new(&g).unwrap();
        let half = g.m() as f64 / 2.0;
        assert!((expectation_flat(&t, &[0.0; 4]).unwrap() - half).abs() < 1e-12);
        assert!((expectation_flat(&t, &[0.0, 0.0, 0.7, -1.2]).unwrap() - half).abs() < 1e-12);
    }

    #[test]
    fn norm_is_preserved() {
        let g = Graph::generate(Family::Ws, 10, 3).unwrap();
        let t = CutTable::new(&g).unwrap();
        let psi = evolve_flat(&t, &[0.3, -1.1, 2.2, 0.4]).unwrap();
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn beta_shift_by_pi_is_a_symmetry() {
        let g = Graph::generate(Family::Reg3, 8, 3).unwrap();
        let t = CutTable::new(&g).unwrap();
        let a = expectation_flat(&t, &[0.4, 0.9, 0.3, 0.1]).unwrap();
        let b = expectation_flat(&t, &[0.4, 0.9, 0.3 + std::f64::consts::PI, 0.1]).unwrap();
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn noise_endpoints() {
        let g = Graph::generate(Family::Er, 6, 2).unwrap();
        let t = CutTable::new(&g).unwrap();
        let theta = [0.5, 0.2, 0.3, 0.8];
        let f = expectation_flat(&t, &theta).unwrap();
        assert_eq!(
            noisy_expectation(&t, &theta, &NoiseModel::exact()).unwrap(),
            f
        );
        let full = NoiseModel {
            epsilon: 1.0,
            shots: None,
        };
        assert_eq!(
            noisy_expectation(&t, &theta, &full).unwrap(),
            g.m() as f64 / 2.0
        );
        let nm = NoiseModel {
            epsilon: 0.01,
            shots: None,
        };
        assert_eq!(nm.nu(2), 1.0 - 0.99f64.powi(4));
        assert!(NoiseModel {
            epsilon: 1.5,
            shots: None
        }
        .validate()
        .is_err());
    }

    #[test]
    fn sampling_is_deterministic_and_bounded() {
        let g = Graph::generate(Family::Ba, 7, 2).unwrap();
        let t = CutTable::new(&g).unwrap();
        let theta = [0.5, 0.2, 0.3, 0.8];
        let a = sample_bitstrings(&t, &theta, 50, 9).unwrap();
        assert_eq!(a, sample_bitstrings(&t, &theta, 50, 9).unwrap());
        let one = sample_bitstrings(&t, &theta, 1, 3).unwrap();
        let f = shot_estimate(&t, &one);
        assert!(f >= 0.0 && f <= g.m() as f64 && f.fract() == 0.0);
    }

    #[test]
    fn ratios() {
        let t = CutTable::new(&edge()).unwrap();
        assert_eq!(
            best_sampled_ratio(&[vec![0.0; 4]], &t, 100, 5).unwrap(),
            1.0
        );
        assert_eq!(
            best_sampled_ratio(&[], &t, 100, 5),
            Err(QaoaError::EmptyTrace)
        );
        let k3 = CutTable::new(&complete(3)).unwrap();
        let r = best_sampled_ratio(&[vec![0.1, 0.2, 0.3, 0.4]], &k3, 3, 1).unwrap();
        assert!(r == 0.0 || r == 1.0);
    }

    #[test]
    fn gradient_along_beta_vanishes_at_origin() {
        let g = Graph::generate(Family::Er, 6, 7).unwrap();
        let t = CutTable::new(&g).unwrap();
        let grad = finite_diff_gradient(&t, &[0.0; 4], DEFAULT_FD_STEP).unwrap();
        assert!(grad[2].abs() < 1e-9 && grad[3].abs() < 1e-9);
    }

    #[test]
    fn rejects_malformed_angles() {
        let t = CutTable::new(&edge()).unwrap();
        assert_eq!(
            expectation_flat(&t, &[0.1; 3]),
            Err(QaoaError::BadLength(3))
        );
        assert_eq!(
            expectation_flat(&t, &[0.1, f64::NAN]),
            Err(QaoaError::NonFinite(1))
        );
        assert!(Angles::new(vec![0.1], vec![]).is_err());
    }
}

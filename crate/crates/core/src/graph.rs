//! Undirected unweighted graphs, the four random families used in the
//! experiments, Laplacian spectra and the node/graph features built on them.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng as _;
use thiserror::Error;

use crate::linalg::{symmetric_eigen, SymmetricEigen};
use crate::rng::{derive_seed, rng, Rng};

/// Largest vertex count accepted anywhere in the crate.
pub const MAX_VERTICES: usize = 24;
const MAX_ATTEMPTS: u64 = 1000;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("invalid vertex count {n} for family {family}: {reason}")]
    InvalidSize {
        family: Family,
        n: usize,
        reason: &'static str,
    },
    #[error(
        "could not generate a connected {family} graph on {n} vertices after {attempts} attempts"
    )]
    GenerationFailed {
        family: Family,
        n: usize,
        attempts: u64,
    },
    #[error("invalid edge ({0}, {1})")]
    InvalidEdge(usize, usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("unknown graph family `{0}`")]
    UnknownFamily(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    /// Erdos-Renyi with edge probability 0.5.
    Er,
    /// Uniform random 3-regular.
    Reg3,
    /// Barabasi-Albert preferential attachment, two edges per new vertex.
    Ba,
    /// Watts-Strogatz ring of degree 4 with rewiring probability 0.3.
    Ws,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Er, Family::Reg3, Family::Ba, Family::Ws];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Er => "ER",
            Family::Reg3 => "REG3",
            Family::Ba => "BA",
            Family::Ws => "WS",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "ER" => Ok(Family::Er),
            "REG3" | "3REG" => Ok(Family::Reg3),
            "BA" => Ok(Family::Ba),
            "WS" => Ok(Family::Ws),
            _ => Err(GraphError::UnknownFamily(s.to_string())),
        }
    }
}

/// A simple undirected graph. Edges are stored as sorted `(i, j)` pairs with
/// `i < j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    family: Family,
    seed: u64,
}

impl Graph {
    /// Builds a graph from an edge list, normalizing each pair to `i < j`.
    /// Self-loops, out-of-range endpoints and duplicates are rejected.
    pub fn new(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        family: Family,
        seed: u64,
    ) -> Result<Self, GraphError> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            if i == j || j >= n {
                return Err(GraphError::InvalidEdge(a, b));
            }
            if !set.insert((i, j)) {
                return Err(GraphError::DuplicateEdge(i, j));
            }
        }
        Ok(Graph {
            n,
            edges: set.into_iter().collect(),
            family,
            seed,
        })
    }

    /// Draws a connected graph of `family` on `n` vertices.
    ///
    /// Disconnected draws are discarded and redrawn from a sub-seed derived
    /// from `(seed, attempt)`, up to 1000 attempts.
    pub fn generate(family: Family, n: usize, seed: u64) -> Result<Self, GraphError> {
        let invalid = |reason| GraphError::InvalidSize { family, n, reason };
        if n < 4 {
            return Err(invalid("need at least 4 vertices"));
        }
        if n > MAX_VERTICES {
            return Err(invalid("too many vertices"));
        }
        match family {
            Family::Reg3 if n % 2 == 1 => return Err(invalid("3-regular graphs need even n")),
            Family::Ws if n < 5 => {
                return Err(invalid("a degree-4 ring needs at least 5 vertices"))
            }
            _ => {}
        }

        for attempt in 0..MAX_ATTEMPTS {
            let mut r = rng(derive_seed(seed, attempt));
            let edges = match family {
                Family::Er => erdos_renyi(n, 0.5, &mut r),
                Family::Reg3 => match random_regular(n, 3, &mut r) {
                    Some(e) => e,
                    None => continue,
                },
                Family::Ba => barabasi_albert(n, 2, &mut r),
                Family::Ws => watts_strogatz(n, 4, 0.3, &mut r),
            };
            let g = Graph::new(n, edges, family, seed).expect("generators emit simple graphs");
            if g.is_connected() {
                return Ok(g);
            }
        }
        Err(GraphError::GenerationFailed {
            family,
            n,
            attempts: MAX_ATTEMPTS,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        for &(i, j) in &self.edges {
            d[i] += 1;
            d[j] += 1;
        }
        d
    }

    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(i, j) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        adj
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let adj = self.neighbors();
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &u in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    count += 1;
                    stack.push(u);
                }
            }
        }
        count == self.n
    }

    /// Row-major `L = D - A`.
    pub fn laplacian(&self) -> Vec<f64> {
        let n = self.n;
        let mut l = vec![0.0; n * n];
        for &(i, j) in &self.edges {
            l[i * n + j] -= 1.0;
            l[j * n + i] -= 1.0;
            l[i * n + i] += 1.0;
            l[j * n + j] += 1.0;
        }
        l
    }

    /// Relabels vertices: old vertex `v` becomes `perm[v]`.
    pub fn relabel(&self, perm: &[usize]) -> Graph {
        assert_eq!(perm.len(), self.n);
        Graph::new(
            self.n,
            self.edges.iter().map(|&(i, j)| (perm[i], perm[j])),
            self.family,
            self.seed,
        )
        .expect("a permutation preserves simplicity")
    }
}

fn erdos_renyi(n: usize, p: f64, r: &mut Rng) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if r.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    edges
}

/// Pairing-model draw; `None` when the pairing produced a loop or multi-edge.
fn random_regular(n: usize, d: usize, r: &mut Rng) -> Option<Vec<(usize, usize)>> {
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
    stubs.shuffle(r);
    let mut seen = BTreeSet::new();
    for pair in stubs.chunks(2) {
        let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
        if a == b || !seen.insert((a, b)) {
            return None;
        }
    }
    Some(seen.into_iter().collect())
}

/// Preferential attachment from a single seed edge `(0, 1)`; each new vertex
/// attaches to `m` distinct earlier vertices drawn proportionally to degree.
fn barabasi_albert(n: usize, m: usize, r: &mut Rng) -> Vec<(usize, usize)> {
    let mut edges = vec![(0, 1)];
    // Every edge endpoint appears once, so a uniform pick is degree-weighted.
    let mut endpoints = vec![0, 1];
    for v in 2..n {
        let mut targets: Vec<usize> = Vec::with_capacity(m);
        let wanted = m.min(v);
        while targets.len() < wanted {
            let t = endpoints[r.random_range(0..endpoints.len())];
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for t in targets {
            edges.push((t, v));
            endpoints.push(t);
            endpoints.push(v);
        }
    }
    edges
}

fn watts_strogatz(n: usize, k: usize, p: f64, r: &mut Rng) -> Vec<(usize, usize)> {
    let key = |a: usize, b: usize| (a.min(b), a.max(b));
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for offset in 1..=k / 2 {
        for u in 0..n {
            let v = (u + offset) % n;
            adj[u].insert(v);
            adj[v].insert(u);
        }
    }
    for offset in 1..=k / 2 {
        for u in 0..n {
            let v = (u + offset) % n;
            if !adj[u].contains(&v) || r.random::<f64>() >= p {
                continue;
            }
            if adj[u].len() >= n - 1 {
                continue;
            }
            let w = loop {
                let w = r.random_range(0..n);
                if w != u && !adj[u].contains(&w) {
                    break w;
                }
            };
            adj[u].remove(&v);
            adj[v].remove(&u);
            adj[u].insert(w);
            adj[w].insert(u);
        }
    }
    let mut edges = BTreeSet::new();
    for (u, nbrs) in adj.iter().enumerate() {
        for &v in nbrs {
            edges.insert(key(u, v));
        }
    }
    edges.into_iter().collect()
}

/// Eigen-decomposition of the graph Laplacian, eigenvalues ascending.
pub fn laplacian_eigs(g: &Graph) -> SymmetricEigen {
    symmetric_eigen(&g.laplacian(), g.n())
}

/// Laplacian positional encoding: the `k` eigenvectors after the trivial
/// one, zero-padded when the graph has fewer than `k + 1` vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEncoding {
    pub k: usize,
    pub n: usize,
    /// Row-major `n * k`.
    pub vectors: Vec<f64>,
    pub eigenvalues: Vec<f64>,
}

impl SpectralEncoding {
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.vectors[i * self.k + j]).collect()
    }

    /// Multiplies each column by an independent random sign.
    pub fn flip_signs(&self, r: &mut Rng) -> SpectralEncoding {
        let signs: Vec<f64> = (0..self.k)
            .map(|_| if r.random::<bool>() { 1.0 } else { -1.0 })
            .collect();
        let mut out = self.clone();
        for i in 0..self.n {
            for (j, s) in signs.iter().enumerate() {
                out.vectors[i * self.k + j] *= s;
            }
        }
        out
    }
}

const SIGN_EPS: f64 = 1e-9;

/// Encoding with the inference-time sign convention: in every column the
/// first entry with magnitude above 1e-9 is positive.
pub fn canonical_encoding(g: &Graph, k: usize) -> SpectralEncoding {
    let eig = laplacian_eigs(g);
    let n = g.n();
    let mut vectors = vec![0.0; n * k];
    let mut eigenvalues = vec![0.0; k];
    for j in 0..k {
        let src = j + 1;
        if src >= n {
            break;
        }
        eigenvalues[j] = eig.values[src];
        let col = eig.vector(src);
        let sign = col
            .iter()
            .find(|x| x.abs() > SIGN_EPS)
            .map_or(1.0, |x| x.signum());
        for i in 0..n {
            vectors[i * k + j] = sign * col[i];
        }
    }
    SpectralEncoding {
        k,
        n,
        vectors,
        eigenvalues,
    }
}

/// Canonical encoding, then (for training) independent per-column sign flips
/// drawn from `sign_seed`. `None` keeps the canonical signs.
pub fn spectral_encoding(g: &Graph, k: usize, sign_seed: Option<u64>) -> SpectralEncoding {
    let enc = canonical_encoding(g, k);
    match sign_seed {
        Some(s) => enc.flip_signs(&mut rng(s)),
        None => enc,
    }
}

/// Row-major `n * (k + 1)` node features: `d_v / n` followed by the encoding.
pub fn node_features(g: &Graph, enc: &SpectralEncoding) -> Vec<f64> {
    assert_eq!(enc.n, g.n(), "encoding computed for a different graph");
    let n = g.n();
    let width = enc.k + 1;
    let deg = g.degrees();
    let mut x = vec![0.0; n * width];
    for v in 0..n {
        x[v * width] = deg[v] as f64 / n as f64;
        x[v * width + 1..(v + 1) * width].copy_from_slice(&enc.vectors[v * enc.k..(v + 1) * enc.k]);
    }
    x
}

/// The 8 graph-level descriptors used by the nearest-neighbour baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HandcraftedFeatures {
    pub density: f64,
    pub mean_degree: f64,
    pub degree_std: f64,
    pub mean_clustering: f64,
    pub fiedler: f64,
    pub max_eigenvalue: f64,
    pub n: f64,
    pub m: f64,
}

impl HandcraftedFeatures {
    pub fn to_array(&self) -> [f64; 8] {
        [
            self.density,
            self.mean_degree,
            self.degree_std,
            self.mean_clustering,
            self.fiedler,
            self.max_eigenvalue,
            self.n,
            self.m,
        ]
    }
}

pub fn handcrafted(g: &Graph) -> HandcraftedFeatures {
    let n = g.n();
    let m = g.m();
    let deg = g.degrees();
    let nf = n as f64;
    let mean_degree = deg.iter().sum::<usize>() as f64 / nf;
    let degree_std = (deg
        .iter()
        .map(|&d| (d as f64 - mean_degree).powi(2))
        .sum::<f64>()
        / nf)
        .sqrt();

    let adj = g.neighbors();
    let mut edge_set = BTreeSet::new();
    for &e in g.edges() {
        edge_set.insert(e);
    }
    let clustering: f64 = (0..n)
        .map(|v| {
            let nb = &adj[v];
            let d = nb.len();
            if d < 2 {
                return 0.0;
            }
            let mut links = 0usize;
            for a in 0..d {
                for b in (a + 1)..d {
                    let (x, y) = (nb[a].min(nb[b]), nb[a].max(nb[b]));
                    if edge_set.contains(&(x, y)) {
                        links += 1;
                    }
                }
            }
            2.0 * links as f64 / (d * (d - 1)) as f64
        })
        .sum::<f64>()
        / nf;

    let eig = laplacian_eigs(g);
    let fiedler = if n > 1 { eig.values[1] } else { 0.0 };
    let max_eigenvalue = eig.values.last().copied().unwrap_or(0.0);
    HandcraftedFeatures {
        density: if n > 1 {
            2.0 * m as f64 / (nf * (nf - 1.0))
        } else {
            0.0
        },
        mean_degree,
        degree_std,
        mean_clustering: clustering,
        fiedler,
        max_eigenvalue,
        n: nf,
        m: m as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path2() -> Graph {
        Graph::new(2, [(0, 1)], Family::Er, 0).unwrap()
    }

    fn cycle4() -> Graph {
        Graph::new(4, [(0, 1), (1, 2), (2, 3), (0, 3)], Family::Ws, 0).unwrap()
    }

    fn complete(n: usize) -> Graph {
        let edges = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j)));
        Graph::new(n, edges, Family::Reg3, 0).unwrap()
    }

    #[test]
    fn rejects_bad_edges() {
        assert_eq!(
            Graph::new(3, [(1, 1)], Family::Er, 0),
            Err(GraphError::InvalidEdge(1, 1))
        );
        assert_eq!(
            Graph::new(3, [(0, 3)], Family::Er, 0),
            Err(GraphError::InvalidEdge(0, 3))
        );
        assert_eq!(
            Graph::new(3, [(0, 1), (1, 0)], Family::Er, 0),
            Err(GraphError::DuplicateEdge(0, 1))
        );
    }

    #[test]
    fn generator_preconditions() {
        assert!(matches!(
            Graph::generate(Family::Reg3, 7, 1),
            Err(GraphError::InvalidSize { .. })
        ));
        assert!(matches!(
            Graph::generate(Family::Er, 3, 1),
            Err(GraphError::InvalidSize { .. })
        ));
        assert!(matches!(
            Graph::generate(Family::Er, 25, 1),
            Err(GraphError::InvalidSize { .. })
        ));
    }

    #[test]
    fn reg3_on_four_vertices_is_k4() {
        for seed in 0..5 {
            let g = Graph::generate(Family::Reg3, 4, seed).unwrap();
            assert_eq!(g.edges(), complete(4).edges());
        }
    }

    #[test]
    fn reg3_degrees() {
        for n in [8, 10, 16] {
            let g = Graph::generate(Family::Reg3, n, 3).unwrap();
            assert!(g.degrees().iter().all(|&d| d == 3));
            assert_eq!(g.m(), 3 * n / 2);
        }
    }

    #[test]
    fn ba_edge_count() {
        // seed edge plus two per added vertex
        for seed in 0..10 {
            let g = Graph::generate(Family::Ba, 8, seed).unwrap();
            assert_eq!(g.m(), 2 * (8 - 2) + 1);
        }
    }

    #[test]
    fn ws_keeps_edge_count() {
        for seed in 0..10 {
            let g = Graph::generate(Family::Ws, 12, seed).unwrap();
            assert_eq!(g.m(), 24);
        }
    }

    #[test]
    fn generation_is_reproducible_and_connected() {
        for fam in Family::ALL {
            let a = Graph::generate(fam, 10, 99).unwrap();
            let b = Graph::generate(fam, 10, 99).unwrap();
            assert_eq!(a, b);
            assert!(a.is_connected());
        }
    }

    #[test]
    fn path_and_cycle_spectra() {
        let e = laplacian_eigs(&path2());
        assert!((e.values[0]).abs() < 1e-12 && (e.values[1] - 2.0).abs() < 1e-12);
        let e = laplacian_eigs(&cycle4());
        for (v, want) in e.values.iter().zip([0.0, 2.0, 2.0, 4.0]) {
            assert!((v - want).abs() < 1e-10);
        }
    }

    #[test]
    fn encoding_padding_and_norm() {
        let enc = spectral_encoding(&path2(), 3, None);
        assert!((enc.column(0).iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(enc
            .column(1)
            .iter()
            .chain(enc.column(2).iter())
            .all(|&x| x == 0.0));
    }

    #[test]
    fn sign_seeds_only_flip_columns() {
        let g = Graph::generate(Family::Er, 10, 5).unwrap();
        let a = spectral_encoding(&g, 6, Some(1));
        let b = spectral_encoding(&g, 6, Some(2));
        for j in 0..6 {
            let (ca, cb) = (a.column(j), b.column(j));
            let same = ca.iter().zip(&cb).all(|(x, y)| (x - y).abs() < 1e-14);
            let flipped = ca.iter().zip(&cb).all(|(x, y)| (x + y).abs() < 1e-14);
            assert!(same || flipped);
        }
    }

    #[test]
    fn canonical_sign_convention() {
        let g = Graph::generate(Family::Ba, 9, 2).unwrap();
        let enc = canonical_encoding(&g, 4);
        for j in 0..4 {
            let first = enc.column(j).into_iter().find(|x| x.abs() > 1e-9).unwrap();
            assert!(first > 0.0);
        }
    }

    #[test]
    fn node_feature_layout() {
        let g = complete(4);
        let x = node_features(&g, &spectral_encoding(&g, 0, None));
        assert_eq!(x, vec![0.75; 4]);
        let g = path2();
        let x = node_features(&g, &spectral_encoding(&g, 2, None));
        assert_eq!(x.len(), 2 * 3);
        assert_eq!((x[0], x[3]), (0.5, 0.5));
    }

    #[test]
    fn handcrafted_reference_values() {
        let f = handcrafted(&complete(4));
        assert_eq!((f.density, f.mean_degree, f.degree_std), (1.0, 3.0, 0.0));
        assert!((f.mean_clustering - 1.0).abs() < 1e-15);
        let f = handcrafted(&path2());
        assert_eq!((f.mean_clustering, f.density, f.m), (0.0, 1.0, 1.0));
        let f = handcrafted(&cycle4());
        assert!((f.max_eigenvalue - 4.0).abs() < 1e-10);
        assert!(f.fiedler <= f.max_eigenvalue);
    }
}

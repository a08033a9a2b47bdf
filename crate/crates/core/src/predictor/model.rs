//! Three-layer GIN encoder with mean/max pooling and two linear heads.
//!
//! Parameters live in one flat `Vec<f64>` so that optimizers, gradient
//! checks and checkpoints all see the same layout.

use rand::Rng as _;

use super::tensor::{add_at_b, matmul, matmul_bt};
use super::PredictorError;
use crate::graph::{canonical_encoding, node_features, Graph, SpectralEncoding};
use crate::rng::{rng, Rng};

pub const HIDDEN: usize = 64;
pub const LAYERS: usize = 3;
pub const LOGVAR_MIN: f64 = -5.0;
pub const LOGVAR_MAX: f64 = 2.0;
const LN_EPS: f64 = 1e-5;

/// Whether the variance head is trained and used.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeadKind {
    Gaussian,
    /// Mean head only; the reported log-variance is always 0.
    Point,
}

impl HeadKind {
    pub fn as_str(self) -> &'static str {
        match self {
            HeadKind::Gaussian => "gaussian",
            HeadKind::Point => "point",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelShape {
    /// Spectral encoding dimension; node features have `k + 1` columns.
    pub k: usize,
    /// QAOA depth; the heads output `2p` values.
    pub p: usize,
    pub hidden: usize,
    pub layers: usize,
}

impl ModelShape {
    pub fn new(k: usize, p: usize) -> Self {
        ModelShape {
            k,
            p,
            hidden: HIDDEN,
            layers: LAYERS,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.k + 1
    }

    pub fn out_dim(&self) -> usize {
        2 * self.p
    }

    pub fn embedding_dim(&self) -> usize {
        2 * self.hidden
    }
}

#[derive(Debug, Clone, PartialEq)]
struct LayerOffsets {
    din: usize,
    eps: usize,
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
    gamma: usize,
    beta: usize,
}

#[derive(Debug, Clone, PartialEq)]
struct Layout {
    layers: Vec<LayerOffsets>,
    w_mu: usize,
    b_mu: usize,
    w_lv: usize,
    b_lv: usize,
    total: usize,
}

impl Layout {
    fn new(shape: &ModelShape) -> Self {
        let h = shape.hidden;
        let mut at = 0;
        let mut take = |len: usize| {
            let o = at;
            at += len;
            o
        };
        let mut layers = Vec::with_capacity(shape.layers);
        for l in 0..shape.layers {
            let din = if l == 0 { shape.in_dim() } else { h };
            layers.push(LayerOffsets {
                din,
                eps: take(1),
                w1: take(din * h),
                b1: take(h),
                w2: take(h * h),
                b2: take(h),
                gamma: take(h),
                beta: take(h),
            });
        }
        let e = shape.embedding_dim();
        let o = shape.out_dim();
        let w_mu = take(e * o);
        let b_mu = take(o);
        let w_lv = take(e * o);
        let b_lv = take(o);
        Layout {
            layers,
            w_mu,
            b_mu,
            w_lv,
            b_lv,
            total: at,
        }
    }
}

/// Node features plus the row-normalized `A + I` neighbourhoods of one graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphInput {
    n: usize,
    width: usize,
    features: Vec<f64>,
    neighbors: Vec<Vec<usize>>,
}

impl GraphInput {
    pub fn new(g: &Graph, enc: &SpectralEncoding) -> Self {
        Self::from_features(g, node_features(g, enc), enc.k + 1)
    }

    /// Inference-time input with the canonical sign convention.
    pub fn canonical(g: &Graph, k: usize) -> Self {
        Self::new(g, &canonical_encoding(g, k))
    }

    /// `features` is row-major `n * width`.
    pub fn from_features(g: &Graph, features: Vec<f64>, width: usize) -> Self {
        assert_eq!(features.len(), g.n() * width, "feature matrix shape");
        GraphInput {
            n: g.n(),
            width,
            features,
            neighbors: g.neighbors(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    /// Copy with encoding column `j` (feature column `j + 1`) multiplied by
    /// `signs[j]`.
    pub fn with_signs(&self, signs: &[f64]) -> GraphInput {
        assert_eq!(signs.len() + 1, self.width);
        let mut out = self.clone();
        for v in 0..self.n {
            for (j, s) in signs.iter().enumerate() {
                out.features[v * self.width + j + 1] *= s;
            }
        }
        out
    }

    /// `out_v = (x_v + sum_{u ~ v} x_u) / (d_v + 1)`.
    fn aggregate(&self, x: &[f64], width: usize, out: &mut [f64]) {
        for v in 0..self.n {
            let o = &mut out[v * width..(v + 1) * width];
            o.copy_from_slice(&x[v * width..(v + 1) * width]);
            for &u in &self.neighbors[v] {
                for (a, b) in o.iter_mut().zip(&x[u * width..(u + 1) * width]) {
                    *a += b;
                }
            }
            let inv = 1.0 / (self.neighbors[v].len() + 1) as f64;
            o.iter_mut().for_each(|a| *a *= inv);
        }
    }

    /// Transpose of [`GraphInput::aggregate`], accumulated into `out`.
    fn aggregate_t(&self, d: &[f64], width: usize, out: &mut [f64]) {
        for v in 0..self.n {
            let inv = 1.0 / (self.neighbors[v].len() + 1) as f64;
            let row = &d[v * width..(v + 1) * width];
            for t in std::iter::once(v).chain(self.neighbors[v].iter().copied()) {
                for (a, b) in out[t * width..(t + 1) * width].iter_mut().zip(row) {
                    *a += inv * b;
                }
            }
        }
    }
}

/// Predicted diagonal Gaussian over the `2p` angles.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPrediction {
    pub mu: Vec<f64>,
    pub logvar: Vec<f64>,
}

impl GaussianPrediction {
    pub fn var(&self) -> Vec<f64> {
        self.logvar.iter().map(|l| l.exp()).collect()
    }

    pub fn std(&self) -> Vec<f64> {
        self.logvar.iter().map(|l| (0.5 * l).exp()).collect()
    }
}

struct LayerCache {
    input: Vec<f64>,
    s: Vec<f64>,
    z1: Vec<f64>,
    a1: Vec<f64>,
    xhat: Vec<f64>,
    inv_std: Vec<f64>,
}

struct Cache {
    layers: Vec<LayerCache>,
    argmax: Vec<usize>,
    lv_raw: Vec<f64>,
}

/// Result of one forward pass. Carries the activations needed by
/// [`GinModel::backward`] when requested.
pub struct Forward {
    pub mu: Vec<f64>,
    pub logvar: Vec<f64>,
    pub embedding: Vec<f64>,
    cache: Option<Cache>,
}

impl Forward {
    pub fn prediction(&self) -> GaussianPrediction {
        GaussianPrediction {
            mu: self.mu.clone(),
            logvar: self.logvar.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GinModel {
    shape: ModelShape,
    head: HeadKind,
    layout: Layout,
    params: Vec<f64>,
}

impl GinModel {
    /// All-zero parameters except LayerNorm gains, which start at 1.
    pub fn zeros(shape: ModelShape, head: HeadKind) -> Self {
        let layout = Layout::new(&shape);
        let mut params = vec![0.0; layout.total];
        for l in &layout.layers {
            params[l.gamma..l.gamma + shape.hidden].fill(1.0);
        }
        GinModel {
            shape,
            head,
            layout,
            params,
        }
    }

    /// Glorot-uniform weights, zero biases and self-weights, unit gains.
    pub fn init(shape: ModelShape, head: HeadKind, seed: u64) -> Self {
        let mut m = Self::zeros(shape, head);
        let mut r = rng(seed);
        let h = shape.hidden;
        let layers = m.layout.layers.clone();
        for l in &layers {
            glorot(&mut m.params[l.w1..l.w1 + l.din * h], l.din, h, &mut r);
            glorot(&mut m.params[l.w2..l.w2 + h * h], h, h, &mut r);
        }
        let (e, o) = (shape.embedding_dim(), shape.out_dim());
        let (w_mu, w_lv) = (m.layout.w_mu, m.layout.w_lv);
        glorot(&mut m.params[w_mu..w_mu + e * o], e, o, &mut r);
        if head == HeadKind::Gaussian {
            glorot(&mut m.params[w_lv..w_lv + e * o], e, o, &mut r);
        }
        m
    }

    /// Rebuilds a model from a flat parameter vector.
    pub fn from_params(
        shape: ModelShape,
        head: HeadKind,
        params: Vec<f64>,
    ) -> Result<Self, PredictorError> {
        let layout = Layout::new(&shape);
        if params.len() != layout.total {
            return Err(PredictorError::ParamCount {
                expected: layout.total,
                got: params.len(),
            });
        }
        Ok(GinModel {
            shape,
            head,
            layout,
            params,
        })
    }

    pub fn shape(&self) -> ModelShape {
        self.shape
    }

    pub fn head(&self) -> HeadKind {
        self.head
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    /// Rounds every parameter to the nearest `f32`, the checkpoint precision.
    pub fn quantize_f32(&mut self) {
        for p in &mut self.params {
            *p = *p as f32 as f64;
        }
    }

    pub fn predict(&self, g: &Graph) -> Result<GaussianPrediction, PredictorError> {
        Ok(self
            .forward(&GraphInput::canonical(g, self.shape.k), false)?
            .prediction())
    }

    pub fn forward(&self, x: &GraphInput, keep: bool) -> Result<Forward, PredictorError> {
        if x.width != self.shape.in_dim() {
            return Err(PredictorError::FeatureDim {
                expected: self.shape.in_dim(),
                got: x.width,
            });
        }
        let n = x.n;
        let h = self.shape.hidden;
        let p = &self.params;
        let mut caches = Vec::with_capacity(self.shape.layers);
        let mut cur = x.features.clone();
        for l in &self.layout.layers {
            let din = l.din;
            let eps = p[l.eps];
            let mut s = vec![0.0; n * din];
            x.aggregate(&cur, din, &mut s);
            for (a, b) in s.iter_mut().zip(&cur) {
                *a += (1.0 + eps) * b;
            }
            let mut z1 = vec![0.0; n * h];
            matmul(&s, &p[l.w1..l.w1 + din * h], n, din, h, &mut z1);
            add_rows(&mut z1, &p[l.b1..l.b1 + h]);
            let a1: Vec<f64> = z1.iter().map(|v| v.max(0.0)).collect();
            let mut z2 = vec![0.0; n * h];
            matmul(&a1, &p[l.w2..l.w2 + h * h], n, h, h, &mut z2);
            add_rows(&mut z2, &p[l.b2..l.b2 + h]);

            let mut xhat = z2;
            let mut inv_std = vec![0.0; n];
            let mut out = vec![0.0; n * h];
            for v in 0..n {
                let row = &mut xhat[v * h..(v + 1) * h];
                let mean = row.iter().sum::<f64>() / h as f64;
                let var = row.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / h as f64;
                let is = 1.0 / (var + LN_EPS).sqrt();
                inv_std[v] = is;
                for (j, a) in row.iter_mut().enumerate() {
                    *a = (*a - mean) * is;
                    out[v * h + j] = p[l.gamma + j] * *a + p[l.beta + j];
                }
            }
            let input = std::mem::replace(&mut cur, out);
            if keep {
                caches.push(LayerCache {
                    input,
                    s,
                    z1,
                    a1,
                    xhat,
                    inv_std,
                });
            }
        }

        let mut embedding = vec![0.0; 2 * h];
        let mut argmax = vec![0usize; h];
        for j in 0..h {
            let mut best = f64::NEG_INFINITY;
            let mut sum = 0.0;
            for v in 0..n {
                let a = cur[v * h + j];
                sum += a;
                if a > best {
                    best = a;
                    argmax[j] = v;
                }
            }
            embedding[j] = sum / n as f64;
            embedding[h + j] = best;
        }

        let (e, o) = (self.shape.embedding_dim(), self.shape.out_dim());
        let mut mu = p[self.layout.b_mu..self.layout.b_mu + o].to_vec();
        let mut lv_raw = p[self.layout.b_lv..self.layout.b_lv + o].to_vec();
        let mut tmp = vec![0.0; o];
        matmul(
            &embedding,
            &p[self.layout.w_mu..self.layout.w_mu + e * o],
            1,
            e,
            o,
            &mut tmp,
        );
        mu.iter_mut().zip(&tmp).for_each(|(a, b)| *a += b);
        let logvar = match self.head {
            HeadKind::Gaussian => {
                matmul(
                    &embedding,
                    &p[self.layout.w_lv..self.layout.w_lv + e * o],
                    1,
                    e,
                    o,
                    &mut tmp,
                );
                lv_raw.iter_mut().zip(&tmp).for_each(|(a, b)| *a += b);
                lv_raw
                    .iter()
                    .map(|v| v.clamp(LOGVAR_MIN, LOGVAR_MAX))
                    .collect()
            }
            HeadKind::Point => vec![0.0; o],
        };

        Ok(Forward {
            mu,
            logvar,
            embedding,
            cache: keep.then_some(Cache {
                layers: caches,
                argmax,
                lv_raw,
            }),
        })
    }

    /// Accumulates into `grad` the parameter gradient of a loss whose
    /// derivatives with respect to this graph's outputs are given.
    /// `d_logvar` is with respect to the clamped log-variance.
    pub fn backward(
        &self,
        x: &GraphInput,
        fwd: &Forward,
        d_mu: &[f64],
        d_logvar: &[f64],
        d_embedding: Option<&[f64]>,
        grad: &mut [f64],
    ) {
        let cache = fwd
            .cache
            .as_ref()
            .expect("forward pass was run without caching");
        let n = x.n;
        let h = self.shape.hidden;
        let (e, o) = (self.shape.embedding_dim(), self.shape.out_dim());
        let p = &self.params;
        let lay = &self.layout;

        let mut d_emb = match d_embedding {
            Some(d) => d.to_vec(),
            None => vec![0.0; e],
        };
        add_at_b(
            &fwd.embedding,
            d_mu,
            1,
            e,
            o,
            &mut grad[lay.w_mu..lay.w_mu + e * o],
        );
        add_to(&mut grad[lay.b_mu..lay.b_mu + o], d_mu);
        let mut tmp = vec![0.0; e];
        matmul_bt(d_mu, &p[lay.w_mu..lay.w_mu + e * o], 1, o, e, &mut tmp);
        add_to(&mut d_emb, &tmp);
        if self.head == HeadKind::Gaussian {
            let d_raw: Vec<f64> = d_logvar
                .iter()
                .zip(&cache.lv_raw)
                .map(|(d, r)| {
                    if (LOGVAR_MIN..=LOGVAR_MAX).contains(r) {
                        *d
                    } else {
                        0.0
                    }
                })
                .collect();
            add_at_b(
                &fwd.embedding,
                &d_raw,
                1,
                e,
                o,
                &mut grad[lay.w_lv..lay.w_lv + e * o],
            );
            add_to(&mut grad[lay.b_lv..lay.b_lv + o], &d_raw);
            matmul_bt(&d_raw, &p[lay.w_lv..lay.w_lv + e * o], 1, o, e, &mut tmp);
            add_to(&mut d_emb, &tmp);
        }

        // pooling
        let mut d_out = vec![0.0; n * h];
        for j in 0..h {
            let dm = d_emb[j] / n as f64;
            for v in 0..n {
                d_out[v * h + j] += dm;
            }
            d_out[cache.argmax[j] * h + j] += d_emb[h + j];
        }

        for (l, c) in lay.layers.iter().zip(&cache.layers).rev() {
            let din = l.din;
            // LayerNorm
            let mut dz2 = vec![0.0; n * h];
            for v in 0..n {
                let xh = &c.xhat[v * h..(v + 1) * h];
                let dout = &d_out[v * h..(v + 1) * h];
                let mut mean_dx = 0.0;
                let mut mean_dx_x = 0.0;
                for j in 0..h {
                    grad[l.gamma + j] += dout[j] * xh[j];
                    grad[l.beta + j] += dout[j];
                    let dx = dout[j] * p[l.gamma + j];
                    mean_dx += dx;
                    mean_dx_x += dx * xh[j];
                }
                mean_dx /= h as f64;
                mean_dx_x /= h as f64;
                for j in 0..h {
                    let dx = dout[j] * p[l.gamma + j];
                    dz2[v * h + j] = c.inv_std[v] * (dx - mean_dx - xh[j] * mean_dx_x);
                }
            }
            add_at_b(&c.a1, &dz2, n, h, h, &mut grad[l.w2..l.w2 + h * h]);
            add_col_sums(&mut grad[l.b2..l.b2 + h], &dz2, h);
            let mut dz1 = vec![0.0; n * h];
            matmul_bt(&dz2, &p[l.w2..l.w2 + h * h], n, h, h, &mut dz1);
            for (d, z) in dz1.iter_mut().zip(&c.z1) {
                if *z <= 0.0 {
                    *d = 0.0;
                }
            }
            add_at_b(&c.s, &dz1, n, din, h, &mut grad[l.w1..l.w1 + din * h]);
            add_col_sums(&mut grad[l.b1..l.b1 + h], &dz1, h);
            let mut ds = vec![0.0; n * din];
            matmul_bt(&dz1, &p[l.w1..l.w1 + din * h], n, h, din, &mut ds);

            grad[l.eps] += ds.iter().zip(&c.input).map(|(a, b)| a * b).sum::<f64>();
            let mut d_in: Vec<f64> = ds.iter().map(|d| (1.0 + p[l.eps]) * d).collect();
            x.aggregate_t(&ds, din, &mut d_in);
            d_out = d_in;
        }
    }
}

fn glorot(w: &mut [f64], fan_in: usize, fan_out: usize, r: &mut Rng) {
    let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
    for x in w {
        *x = r.random_range(-a..a);
    }
}

fn add_rows(m: &mut [f64], b: &[f64]) {
    for row in m.chunks_exact_mut(b.len()) {
        add_to(row, b);
    }
}

fn add_to(a: &mut [f64], b: &[f64]) {
    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
}

fn add_col_sums(out: &mut [f64], m: &[f64], cols: usize) {
    for row in m.chunks_exact(cols) {
        add_to(out, row);
    }
}

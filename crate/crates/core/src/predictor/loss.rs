//! Training losses over a full batch, each returning its value together with
//! the gradient with respect to the per-graph outputs.
//!
//! Predictions are parameterized by `mu` and `logvar = log sigma^2`, the raw
//! outputs of the two heads.

/// Value plus gradients with respect to `mu` and `logvar`, one row per graph.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadLoss {
    pub value: f64,
    pub d_mu: Vec<Vec<f64>>,
    pub d_logvar: Vec<Vec<f64>>,
}

fn zeros_like(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    rows.iter().map(|r| vec![0.0; r.len()]).collect()
}

/// `(1/N) sum_i ||mu_i - theta_i||^2`.
pub fn mse(mu: &[Vec<f64>], targets: &[Vec<f64>]) -> HeadLoss {
    let n = mu.len() as f64;
    let mut d_mu = zeros_like(mu);
    let mut value = 0.0;
    for (i, (m, t)) in mu.iter().zip(targets).enumerate() {
        for (j, (a, b)) in m.iter().zip(t).enumerate() {
            let r = a - b;
            value += r * r;
            d_mu[i][j] = 2.0 * r / n;
        }
    }
    HeadLoss {
        value: value / n,
        d_logvar: zeros_like(mu),
        d_mu,
    }
}

/// Gaussian negative log-likelihood without the constant:
/// `(1/N) sum_i sum_j (mu_ij - theta_ij)^2 / sigma_ij^2 + log sigma_ij^2`.
pub fn nll(mu: &[Vec<f64>], logvar: &[Vec<f64>], targets: &[Vec<f64>]) -> HeadLoss {
    let n = mu.len() as f64;
    let mut d_mu = zeros_like(mu);
    let mut d_logvar = zeros_like(mu);
    let mut value = 0.0;
    for i in 0..mu.len() {
        for j in 0..mu[i].len() {
            let r = mu[i][j] - targets[i][j];
            let inv_var = (-logvar[i][j]).exp();
            value += r * r * inv_var + logvar[i][j];
            d_mu[i][j] = 2.0 * r * inv_var / n;
            d_logvar[i][j] = (1.0 - r * r * inv_var) / n;
        }
    }
    HeadLoss {
        value: value / n,
        d_mu,
        d_logvar,
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Similarity-weighted pairwise squared 2-Wasserstein distance between the
/// predicted diagonal Gaussians:
/// `(1/B^2) sum_{i != j} w_ij (||mu_i - mu_j||^2 + ||sigma_i - sigma_j||^2)`
/// with `w_ij = exp(-||theta_i - theta_j||^2 / (2 tau^2))`.
pub fn w2(mu: &[Vec<f64>], logvar: &[Vec<f64>], targets: &[Vec<f64>], tau: f64) -> HeadLoss {
    let b = mu.len();
    let mut d_mu = zeros_like(mu);
    let mut d_logvar = zeros_like(mu);
    if b < 2 {
        return HeadLoss {
            value: 0.0,
            d_mu,
            d_logvar,
        };
    }
    let sigma: Vec<Vec<f64>> = logvar
        .iter()
        .map(|r| r.iter().map(|l| (0.5 * l).exp()).collect())
        .collect();
    let scale = 1.0 / (b * b) as f64;
    let mut value = 0.0;
    let mut d_sigma = zeros_like(mu);
    for i in 0..b {
        for j in (i + 1)..b {
            let w = (-sq_dist(&targets[i], &targets[j]) / (2.0 * tau * tau)).exp();
            if w == 0.0 {
                continue;
            }
            let d = sq_dist(&mu[i], &mu[j]) + sq_dist(&sigma[i], &sigma[j]);
            // (i, j) and (j, i) both appear in the sum
            value += 2.0 * w * d;
            let g = 4.0 * w * scale;
            for k in 0..mu[i].len() {
                let dm = mu[i][k] - mu[j][k];
                d_mu[i][k] += g * dm;
                d_mu[j][k] -= g * dm;
                let ds = sigma[i][k] - sigma[j][k];
                d_sigma[i][k] += g * ds;
                d_sigma[j][k] -= g * ds;
            }
        }
    }
    for i in 0..b {
        for k in 0..mu[i].len() {
            d_logvar[i][k] = d_sigma[i][k] * 0.5 * sigma[i][k];
        }
    }
    HeadLoss {
        value: value * scale,
        d_mu,
        d_logvar,
    }
}

/// Value and gradient with respect to the graph embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingLoss {
    pub value: f64,
    pub d_embedding: Vec<Vec<f64>>,
}

const NORM_FLOOR: f64 = 1e-12;

/// Supervised contrastive loss on cosine similarities. Anchor `i` has
/// positives `{j != i : ||theta_i - theta_j|| < delta}`; anchors without
/// positives contribute nothing, but the mean is still over the whole batch.
pub fn contrastive(
    embeddings: &[Vec<f64>],
    targets: &[Vec<f64>],
    delta: f64,
    tau: f64,
) -> EmbeddingLoss {
    let b = embeddings.len();
    let mut d_embedding = zeros_like(embeddings);
    if b < 2 {
        return EmbeddingLoss {
            value: 0.0,
            d_embedding,
        };
    }
    let norms: Vec<f64> = embeddings
        .iter()
        .map(|e| e.iter().map(|x| x * x).sum::<f64>().sqrt().max(NORM_FLOOR))
        .collect();
    let unit: Vec<Vec<f64>> = embeddings
        .iter()
        .zip(&norms)
        .map(|(e, n)| e.iter().map(|x| x / n).collect())
        .collect();
    let dim = embeddings[0].len();
    let mut sim = vec![0.0; b * b];
    for i in 0..b {
        for j in 0..b {
            sim[i * b + j] = unit[i]
                .iter()
                .zip(&unit[j])
                .map(|(x, y)| x * y)
                .sum::<f64>()
                / tau;
        }
    }

    let mut value = 0.0;
    // gradient with respect to the scaled similarities
    let mut d_sim = vec![0.0; b * b];
    for i in 0..b {
        let positives: Vec<usize> = (0..b)
            .filter(|&j| j != i && sq_dist(&targets[i], &targets[j]).sqrt() < delta)
            .collect();
        if positives.is_empty() {
            continue;
        }
        let row = &sim[i * b..(i + 1) * b];
        let max = (0..b)
            .filter(|&k| k != i)
            .map(|k| row[k])
            .fold(f64::NEG_INFINITY, f64::max);
        let denom: f64 = (0..b)
            .filter(|&k| k != i)
            .map(|k| (row[k] - max).exp())
            .sum();
        let lse = max + denom.ln();
        let inv_p = 1.0 / positives.len() as f64;
        for &j in &positives {
            value -= inv_p * (row[j] - lse);
        }
        for k in (0..b).filter(|&k| k != i) {
            let softmax = (row[k] - lse).exp();
            d_sim[i * b + k] += softmax / b as f64;
        }
        for &j in &positives {
            d_sim[i * b + j] -= inv_p / b as f64;
        }
    }

    // s_ij = u_i . u_j / tau
    let mut d_unit = vec![vec![0.0; dim]; b];
    for i in 0..b {
        for j in 0..b {
            let g = d_sim[i * b + j];
            if g == 0.0 {
                continue;
            }
            for k in 0..dim {
                d_unit[i][k] += g * unit[j][k] / tau;
                d_unit[j][k] += g * unit[i][k] / tau;
            }
        }
    }
    for i in 0..b {
        let dot: f64 = unit[i].iter().zip(&d_unit[i]).map(|(u, d)| u * d).sum();
        for k in 0..dim {
            d_embedding[i][k] = (d_unit[i][k] - unit[i][k] * dot) / norms[i];
        }
    }
    EmbeddingLoss {
        value: value / b as f64,
        d_embedding,
    }
}

/// Median pairwise distance between targets, the default positive threshold.
pub fn median_pairwise_distance(targets: &[Vec<f64>]) -> f64 {
    let mut d = Vec::new();
    for i in 0..targets.len() {
        for j in (i + 1)..targets.len() {
            d.push(sq_dist(&targets[i], &targets[j]).sqrt());
        }
    }
    if d.is_empty() {
        return 0.0;
    }
    d.sort_by(f64::total_cmp);
    let m = d.len();
    if m % 2 == 1 {
        d[m / 2]
    } else {
        0.5 * (d[m / 2 - 1] + d[m / 2])
    }
}

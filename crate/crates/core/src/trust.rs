//! Mahalanobis trust regions around a predicted diagonal Gaussian, and the
//! uncertainty-driven query budget.

use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::rng::Rng;

#[derive(Debug, Error, PartialEq)]
pub enum TrustError {
    #[error("confidence level {0} outside (0, 1)")]
    BadAlpha(f64),
    #[error("degrees of freedom must be at least 1")]
    BadDof,
    #[error("region radius must be positive and finite, got {0}")]
    BadRadius(f64),
    #[error("scale {0} must be positive and finite")]
    BadScale(f64),
    #[error("dimension mismatch: region has {expected} coordinates, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("rejection sampler accepted {accepted} of {wanted} points in {draws} draws")]
    SamplingExhausted {
        wanted: usize,
        accepted: usize,
        draws: usize,
    },
    #[error("objective returned a non-finite value at {0:?}")]
    NonFinite(Vec<f64>),
    #[error("interquartile range must be positive, got {0}")]
    BadIqr(f64),
}

/// CDF of the chi-square distribution.
pub fn chi2_cdf(dof: usize, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let h = x / 2.0;
    if dof % 2 == 0 {
        // 1 - e^{-h} sum_{i < dof/2} h^i / i!
        let mut term = 1.0;
        let mut sum = 1.0;
        for i in 1..dof / 2 {
            term *= h / i as f64;
            sum += term;
        }
        1.0 - (-h).exp() * sum
    } else {
        // P(k + 2) = P(k) - h^{k/2} e^{-h} / Gamma(k/2 + 1), from P(1) = erf(sqrt h)
        let mut p = libm::erf(h.sqrt());
        let mut k = 1usize;
        // Gamma(3/2) = sqrt(pi) / 2
        let mut gamma = std::f64::consts::PI.sqrt() / 2.0;
        while k < dof {
            p -= (0.5 * k as f64 * h.ln() - h).exp() / gamma;
            k += 2;
            gamma *= k as f64 / 2.0;
        }
        p.clamp(0.0, 1.0)
    }
}

/// The `alpha`-quantile of chi-square with `dof` degrees of freedom, by
/// bisection on the CDF to an interval width of 1e-10.
pub fn chi2_quantile(dof: usize, alpha: f64) -> Result<f64, TrustError> {
    if dof == 0 {
        return Err(TrustError::BadDof);
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(TrustError::BadAlpha(alpha));
    }
    let mut hi = dof as f64;
    while chi2_cdf(dof, hi) < alpha {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if chi2_cdf(dof, mid) < alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Relative slack on the boundary so projected points always test inside.
const BOUNDARY_RTOL: f64 = 1e-12;

/// `{theta : sum_j (theta_j - mu_j)^2 / sigma_j^2 <= q}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrustRegion {
    center: Vec<f64>,
    inv_scale: Vec<f64>,
    q: f64,
}

impl TrustRegion {
    /// `std` holds per-axis standard deviations.
    pub fn new(center: Vec<f64>, std: &[f64], q: f64) -> Result<Self, TrustError> {
        if center.len() != std.len() {
            return Err(TrustError::Dimension {
                expected: center.len(),
                got: std.len(),
            });
        }
        if !(q > 0.0 && q.is_finite()) {
            return Err(TrustError::BadRadius(q));
        }
        if let Some(&s) = std.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(TrustError::BadScale(s));
        }
        Ok(TrustRegion {
            center,
            inv_scale: std.iter().map(|s| 1.0 / s).collect(),
            q,
        })
    }

    /// Region at the chi-square `alpha` quantile.
    pub fn chi2(center: Vec<f64>, std: &[f64], alpha: f64) -> Result<Self, TrustError> {
        let q = chi2_quantile(center.len(), alpha)?;
        Self::new(center, std, q)
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn std(&self) -> Vec<f64> {
        self.inv_scale.iter().map(|s| 1.0 / s).collect()
    }

    pub fn inv_scale(&self) -> &[f64] {
        &self.inv_scale
    }

    pub fn mahalanobis_sq(&self, theta: &[f64]) -> f64 {
        debug_assert_eq!(theta.len(), self.dim());
        theta
            .iter()
            .zip(&self.center)
            .zip(&self.inv_scale)
            .map(|((x, m), s)| ((x - m) * s).powi(2))
            .sum()
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        self.mahalanobis_sq(theta) <= self.q * (1.0 + BOUNDARY_RTOL)
    }

    /// Radial projection toward the center; identity inside the region.
    pub fn project(&self, theta: &[f64]) -> Vec<f64> {
        let score = self.mahalanobis_sq(theta);
        if score <= self.q * (1.0 + BOUNDARY_RTOL) {
            return theta.to_vec();
        }
        let factor = (self.q / score).sqrt();
        theta
            .iter()
            .zip(&self.center)
            .map(|(x, m)| m + factor * (x - m))
            .collect()
    }

    /// Probability mass of the untruncated Gaussian inside the region.
    pub fn coverage(&self) -> f64 {
        chi2_cdf(self.dim(), self.q)
    }

    /// Rejection sampling from `N(mu, diag sigma^2)` restricted to the region.
    /// Gives up after `ceil(10 * count / coverage)` draws.
    pub fn sample_truncated(&self, count: usize, r: &mut Rng) -> Result<Vec<Vec<f64>>, TrustError> {
        let max_draws = (10.0 * count as f64 / self.coverage()).ceil() as usize;
        let mut out = Vec::with_capacity(count);
        let mut draws = 0;
        while out.len() < count {
            if draws >= max_draws {
                return Err(TrustError::SamplingExhausted {
                    wanted: count,
                    accepted: out.len(),
                    draws,
                });
            }
            draws += 1;
            let x: Vec<f64> = self
                .center
                .iter()
                .zip(&self.inv_scale)
                .map(|(m, s)| {
                    let z: f64 = StandardNormal.sample(r);
                    m + z / s
                })
                .collect();
            if self.contains(&x) {
                out.push(x);
            }
        }
        Ok(out)
    }
}

/// Seed count `K` and polish iterations `T` for one instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetAllocation {
    pub z: f64,
    pub samples: usize,
    pub iterations: usize,
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// `z = (U - U_med) / U_iqr`, `K = clamp(floor(1 + 4 sigmoid(z)), 1, 5)`,
/// `T = clamp(floor(T_base (0.5 + max(z, 0))), 5, 2 T_base)`.
pub fn allocate_budget(
    uncertainty: f64,
    u_med: f64,
    u_iqr: f64,
    t_base: usize,
) -> Result<BudgetAllocation, TrustError> {
    if !(u_iqr > 0.0) {
        return Err(TrustError::BadIqr(u_iqr));
    }
    let z = (uncertainty - u_med) / u_iqr;
    let samples = ((1.0 + 4.0 * logistic(z)).floor() as usize).clamp(1, 5);
    let raw = (t_base as f64 * (0.5 + z.max(0.0))).floor();
    let iterations = raw.max(5.0).min((2 * t_base) as f64) as usize;
    Ok(BudgetAllocation {
        z,
        samples,
        iterations,
    })
}

//! Plug-in values of the theoretical bounds.

use std::f64::consts::PI;
use std::fmt::Write as _;

use super::BenchError;
use crate::trust::chi2_quantile;

/// Constants of the spectral-norm generalization bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralizationInputs {
    /// Input feature norm bound.
    pub b_x: f64,
    /// Per-layer spectral norm.
    pub s: f64,
    pub layers: usize,
    pub width: usize,
    /// Loss bound.
    pub m: f64,
    pub n_train: usize,
    pub delta: f64,
}

impl Default for GeneralizationInputs {
    fn default() -> Self {
        GeneralizationInputs {
            b_x: 2.1,
            s: 1.5,
            layers: 3,
            width: 64,
            m: 8.1,
            n_train: 240,
            delta: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundInputs {
    /// Edge count.
    pub m: usize,
    pub p: usize,
    pub alpha: f64,
    /// Per-axis predicted standard deviations, length `2p`.
    pub sigma: Vec<f64>,
    /// Quality of the predicted mean as a fraction of `C_max`.
    pub r_star: f64,
    pub epsilon: f64,
    pub k: usize,
    pub generalization: GeneralizationInputs,
}

impl Default for BoundInputs {
    /// 3-regular graph at n = 14 with the isotropic proxy sigma = 0.15.
    fn default() -> Self {
        BoundInputs {
            m: 21,
            p: 2,
            alpha: 0.95,
            sigma: vec![0.15; 4],
            r_star: 0.851,
            epsilon: 0.01,
            k: 3,
            generalization: GeneralizationInputs::default(),
        }
    }
}

impl BoundInputs {
    pub fn validate(&self) -> Result<(), BenchError> {
        let g = &self.generalization;
        let ok = self.m > 0
            && self.p > 0
            && self.alpha > 0.0
            && self.alpha < 1.0
            && self.sigma.len() == 2 * self.p
            && self.sigma.iter().all(|s| *s > 0.0)
            && self.r_star > 0.0
            && (0.0..=1.0).contains(&self.epsilon)
            && self.k > 0
            && g.b_x > 0.0
            && g.s > 0.0
            && g.layers > 0
            && g.width > 0
            && g.m > 0.0
            && g.n_train > 0
            && g.delta > 0.0
            && g.delta < 1.0;
        if ok {
            Ok(())
        } else {
            Err(BenchError::Config(
                "bound inputs must be positive with sigma of length 2p".into(),
            ))
        }
    }
}

/// Global Lipschitz constant `2 m sqrt(2p)`.
pub fn lipschitz(m: usize, p: usize) -> f64 {
    2.0 * m as f64 * (2.0 * p as f64).sqrt()
}

/// Ellipsoid volume over the `[-pi, pi]^{2p}` box:
/// `pi^p q^p prod(sigma) / (Gamma(p + 1) (2 pi)^{2p})`.
pub fn volume_ratio(q: f64, sigma: &[f64]) -> f64 {
    let p = sigma.len() as f64 / 2.0;
    let unit_ball = PI.powf(p) / libm::tgamma(p + 1.0);
    unit_ball * q.powf(p) * sigma.iter().product::<f64>() / (2.0 * PI).powf(2.0 * p)
}

/// `L_G sqrt(tr Sigma) / sqrt(K)`.
pub fn best_of_k_gap(l_g: f64, sigma: &[f64], k: usize) -> f64 {
    l_g * sigma.iter().map(|s| s * s).sum::<f64>().sqrt() / (k as f64).sqrt()
}

/// Complexity plus concentration terms of the generalization bound, with the
/// complexity term taken as `2 B_x s^L sqrt(2L log 2d) / sqrt(N)`.
pub fn generalization_gap(g: &GeneralizationInputs) -> f64 {
    let n = g.n_train as f64;
    let l = g.layers as f64;
    let complexity =
        2.0 * g.b_x * g.s.powi(g.layers as i32) * (2.0 * l * (2.0 * g.width as f64).ln()).sqrt()
            / n.sqrt();
    let concentration = 3.0 * g.m * ((2.0 / g.delta).ln() / (2.0 * n)).sqrt();
    complexity + concentration
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundTable {
    pub chi2: f64,
    pub lipschitz: f64,
    /// Expected quality is at least `r_star C_max - landscape_slack`.
    pub landscape_slack: f64,
    pub best_of_k_gap: f64,
    pub volume_ratio: f64,
    pub nu: f64,
    /// Noisy expected quality is at least `noisy_factor C_max - noisy_offset`.
    pub noisy_factor: f64,
    pub noisy_offset: f64,
    pub generalization_gap: f64,
}

pub fn bound_table(inputs: &BoundInputs) -> Result<BoundTable, BenchError> {
    inputs.validate()?;
    let chi2 =
        chi2_quantile(2 * inputs.p, inputs.alpha).map_err(crate::search::SearchError::from)?;
    let l_g = lipschitz(inputs.m, inputs.p);
    let max_var = inputs.sigma.iter().map(|s| s * s).fold(0.0, f64::max);
    let slack = l_g * (chi2 * max_var).sqrt();
    let nu = 1.0 - (1.0 - inputs.epsilon).powi(2 * inputs.p as i32);
    Ok(BoundTable {
        chi2,
        lipschitz: l_g,
        landscape_slack: slack,
        best_of_k_gap: best_of_k_gap(l_g, &inputs.sigma, inputs.k),
        volume_ratio: volume_ratio(chi2, &inputs.sigma),
        nu,
        noisy_factor: (1.0 - nu) * inputs.r_star,
        noisy_offset: (1.0 - nu) * slack - nu * inputs.m as f64 / 2.0,
        generalization_gap: generalization_gap(&inputs.generalization),
    })
}

impl BoundTable {
    pub fn to_csv(&self, inputs: &BoundInputs) -> String {
        let mut s = String::from("quantity,value\n");
        let rows = [
            ("chi2_quantile", self.chi2),
            ("lipschitz", self.lipschitz),
            ("landscape_factor", inputs.r_star),
            ("landscape_slack", self.landscape_slack),
            ("best_of_k_gap", self.best_of_k_gap),
            ("volume_ratio", self.volume_ratio),
            ("nu", self.nu),
            ("noisy_factor", self.noisy_factor),
            ("noisy_offset", self.noisy_offset),
            ("generalization_gap", self.generalization_gap),
        ];
        for (k, v) in rows {
            let _ = writeln!(s, "{k},{v:.6e}");
        }
        s
    }
}

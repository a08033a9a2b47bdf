//! Flat `key = value` experiment configuration.

use std::fmt::Write as _;
use std::str::FromStr;

use super::BenchError;
use crate::baselines::BaselineConfig;
use crate::objective::Method;
use crate::predictor::TrainingConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub p: usize,
    pub k: usize,
    pub train_n: usize,
    pub sizes: Vec<usize>,
    pub train_per_family: usize,
    pub val_per_family: usize,
    pub test_per_family: usize,
    pub target_restarts: usize,
    pub target_iters: usize,
    /// Reduce targets to one representative of their symmetry orbit.
    pub canonical_targets: bool,
    pub t_base: usize,
    pub alpha: f64,
    /// Use the split-conformal radius at level `alpha` instead of chi-square.
    pub conformal: bool,
    pub shots: Option<u32>,
    pub epsilon: f64,
    /// Training seeds; one model pair per seed.
    pub seeds: Vec<u64>,
    pub methods: Vec<Method>,
    pub shot_grid: Vec<u32>,
    /// Write measured wall times; when false the column is zero so that
    /// result files are byte-reproducible.
    pub timing: bool,
    pub training: TrainingConfig,
    pub baselines: BaselineConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 2024,
            p: 2,
            k: 6,
            train_n: 14,
            sizes: vec![8, 10, 12, 14, 16],
            train_per_family: 60,
            val_per_family: 20,
            test_per_family: 12,
            target_restarts: 8,
            target_iters: 400,
            canonical_targets: false,
            t_base: 30,
            alpha: 0.95,
            conformal: false,
            shots: None,
            epsilon: 0.0,
            seeds: vec![0, 1, 2, 3, 4],
            methods: Method::ALL.to_vec(),
            shot_grid: vec![512, 1024, 4096, 8192],
            timing: true,
            training: TrainingConfig::default(),
            baselines: BaselineConfig::default(),
        }
    }
}

fn parse_one<T: FromStr>(key: &str, v: &str) -> Result<T, BenchError> {
    v.parse()
        .map_err(|_| BenchError::Config(format!("bad value `{v}` for `{key}`")))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>, BenchError> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_one(key, s))
        .collect()
}

fn parse_bool(key: &str, v: &str) -> Result<bool, BenchError> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(BenchError::Config(format!("bad boolean `{v}` for `{key}`"))),
    }
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, v: &str) -> Result<(), BenchError> {
        let t = &mut self.training;
        let b = &mut self.baselines;
        match key {
            "seed" => self.seed = parse_one(key, v)?,
            "p" => {
                self.p = parse_one(key, v)?;
                t.p = self.p;
            }
            "k" => {
                self.k = parse_one(key, v)?;
                t.k = self.k;
            }
            "train_n" => self.train_n = parse_one(key, v)?,
            "sizes" => self.sizes = parse_list(key, v)?,
            "train_per_family" => self.train_per_family = parse_one(key, v)?,
            "val_per_family" => self.val_per_family = parse_one(key, v)?,
            "test_per_family" => self.test_per_family = parse_one(key, v)?,
            "target_restarts" => self.target_restarts = parse_one(key, v)?,
            "target_iters" => self.target_iters = parse_one(key, v)?,
            "canonical_targets" => self.canonical_targets = parse_bool(key, v)?,
            "t_base" => self.t_base = parse_one(key, v)?,
            "alpha" => self.alpha = parse_one(key, v)?,
            "conformal" => self.conformal = parse_bool(key, v)?,
            "shots" => {
                self.shots = match v {
                    "none" | "" => None,
                    _ => Some(parse_one(key, v)?),
                }
            }
            "epsilon" => self.epsilon = parse_one(key, v)?,
            "seeds" => self.seeds = parse_list(key, v)?,
            "methods" => self.methods = parse_list(key, v)?,
            "shot_grid" => self.shot_grid = parse_list(key, v)?,
            "timing" => self.timing = parse_bool(key, v)?,
            "lambda_w" => t.lambda_w = parse_one(key, v)?,
            "lambda_c" => t.lambda_c = parse_one(key, v)?,
            "tau_w" => t.tau_w = parse_one(key, v)?,
            "tau_c" => t.tau_c = parse_one(key, v)?,
            "lr" => t.lr = parse_one(key, v)?,
            "weight_decay" => t.weight_decay = parse_one(key, v)?,
            "phase1_epochs" => t.phase1_epochs = parse_one(key, v)?,
            "phase2_epochs" => t.phase2_epochs = parse_one(key, v)?,
            "grad_clip" => t.grad_clip = parse_one(key, v)?,
            "patience" => t.patience = parse_one(key, v)?,
            "random_restarts" => b.random_restarts = parse_one(key, v)?,
            "random_iters" => b.random_iters = parse_one(key, v)?,
            "heuristic_iters" => b.heuristic_iters = parse_one(key, v)?,
            "heuristic_jitter" => b.heuristic_jitter = parse_one(key, v)?,
            "knn_k" => b.knn_k = parse_one(key, v)?,
            "knn_iters" => b.knn_iters = parse_one(key, v)?,
            "tqa_delta" => b.tqa_delta = parse_one(key, v)?,
            "tqa_iters" => b.tqa_iters = parse_one(key, v)?,
            "gnn_point_factor" => b.gnn_point_factor = parse_one(key, v)?,
            _ => return Err(BenchError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines over the defaults. Blank lines and `#`
    /// comments are ignored; unknown keys are errors.
    pub fn parse(text: &str) -> Result<Self, BenchError> {
        let mut cfg = ExperimentConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                BenchError::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: &str| Err(BenchError::Config(m.to_string()));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)");
        }
        if self.train_per_family == 0 || self.test_per_family == 0 {
            return bad("per-family counts must be positive");
        }
        if self.p == 0 || self.t_base == 0 || self.target_restarts == 0 {
            return bad("p, t_base and target_restarts must be positive");
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required");
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad("epsilon must lie in [0, 1]");
        }
        if self.shots == Some(0) {
            return bad("shots must be positive");
        }
        Ok(())
    }

    /// Every setting, in a form [`ExperimentConfig::parse`] reads back.
    pub fn to_text(&self) -> String {
        let t = &self.training;
        let b = &self.baselines;
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("seed", self.seed.to_string());
        put("p", self.p.to_string());
        put("k", self.k.to_string());
        put("train_n", self.train_n.to_string());
        put("sizes", join(&self.sizes));
        put("train_per_family", self.train_per_family.to_string());
        put("val_per_family", self.val_per_family.to_string());
        put("test_per_family", self.test_per_family.to_string());
        put("target_restarts", self.target_restarts.to_string());
        put("target_iters", self.target_iters.to_string());
        put("canonical_targets", self.canonical_targets.to_string());
        put("t_base", self.t_base.to_string());
        put("alpha", self.alpha.to_string());
        put("conformal", self.conformal.to_string());
        put(
            "shots",
            self.shots.map_or_else(|| "none".into(), |s| s.to_string()),
        );
        put("epsilon", self.epsilon.to_string());
        put("seeds", join(&self.seeds));
        put("methods", join(&self.methods));
        put("shot_grid", join(&self.shot_grid));
        put("timing", self.timing.to_string());
        put("lambda_w", t.lambda_w.to_string());
        put("lambda_c", t.lambda_c.to_string());
        put("tau_w", t.tau_w.to_string());
        put("tau_c", t.tau_c.to_string());
        put("lr", t.lr.to_string());
        put("weight_decay", t.weight_decay.to_string());
        put("phase1_epochs", t.phase1_epochs.to_string());
        put("phase2_epochs", t.phase2_epochs.to_string());
        put("grad_clip", t.grad_clip.to_string());
        put("patience", t.patience.to_string());
        put("random_restarts", b.random_restarts.to_string());
        put("random_iters", b.random_iters.to_string());
        put("heuristic_iters", b.heuristic_iters.to_string());
        put("heuristic_jitter", b.heuristic_jitter.to_string());
        put("knn_k", b.knn_k.to_string());
        put("knn_iters", b.knn_iters.to_string());
        put("tqa_delta", b.tqa_delta.to_string());
        put("tqa_iters", b.tqa_iters.to_string());
        put("gnn_point_factor", b.gnn_point_factor.to_string());
        s
    }

    /// Training hyperparameters for one seed.
    pub fn training_for(&self, seed: u64) -> TrainingConfig {
        TrainingConfig {
            k: self.k,
            p: self.p,
            seed,
            ..self.training.clone()
        }
    }
}

/// Loss-weight variations of the sensitivity preset, as
/// `(label, key, value)`.
pub const SENSITIVITY_PRESET: [(&str, &str, f64); 6] = [
    ("lambda_w=0.01", "lambda_w", 0.01),
    ("lambda_w=0.5", "lambda_w", 0.5),
    ("lambda_c=0", "lambda_c", 0.0),
    ("lambda_c=0.2", "lambda_c", 0.2),
    ("tau_w=0.2", "tau_w", 0.2),
    ("tau_w=1.0", "tau_w", 1.0),
];

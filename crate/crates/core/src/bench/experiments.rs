//! Experiment drivers built on the pipeline: the main benchmark, shot grid,
//! ablations, leave-one-family-out and the sensitivity sweep.

use std::fmt;
use std::str::FromStr;

use super::config::{ExperimentConfig, SENSITIVITY_PRESET};
use super::dataset::{generate_dataset, Record, Split};
use super::pipeline::{
    attach_targets, baseline_inputs, evaluate, labelled, test_instances, train_models, train_point,
    train_uq, BaselineInputs, EvalModels, EvalSettings, Evaluation, SeedModels,
};
use super::report::{summarize, Summary};
use super::BenchError;
use crate::graph::Family;
use crate::objective::Method;

/// Dataset with targets for the training and validation splits.
pub fn prepare(cfg: &ExperimentConfig) -> Result<Vec<Record>, BenchError> {
    cfg.validate()?;
    let mut records = generate_dataset(cfg)?;
    attach_targets(&mut records, cfg, &[Split::Train, Split::Val])?;
    Ok(records)
}

pub fn train_all(
    records: &[Record],
    cfg: &ExperimentConfig,
) -> Result<Vec<SeedModels>, BenchError> {
    cfg.seeds
        .iter()
        .map(|&s| train_models(records, cfg, s))
        .collect()
}

/// Every configured method on every test size for every trained seed.
pub fn run_benchmark(
    records: &[Record],
    cfg: &ExperimentConfig,
    models: &[SeedModels],
    inputs: &BaselineInputs,
) -> Result<Evaluation, BenchError> {
    let settings = EvalSettings::from_config(cfg);
    let mut out = Evaluation::default();
    for m in models {
        for &n in &cfg.sizes {
            let inst = test_instances(records, n, None);
            out.extend(evaluate(
                &inst,
                EvalModels::from_seed(m, inputs),
                &settings,
            )?);
        }
    }
    Ok(out)
}

/// The benchmark at the training size under each shot budget of the grid.
pub fn shot_grid(
    records: &[Record],
    cfg: &ExperimentConfig,
    models: &[SeedModels],
    inputs: &BaselineInputs,
) -> Result<Vec<(u32, Evaluation)>, BenchError> {
    let inst = test_instances(records, cfg.train_n, None);
    cfg.shot_grid
        .iter()
        .map(|&shots| {
            let mut settings = EvalSettings::from_config(cfg);
            settings.noise.shots = Some(shots);
            let mut out = Evaluation::default();
            for m in models {
                out.extend(evaluate(
                    &inst,
                    EvalModels::from_seed(m, inputs),
                    &settings,
                )?);
            }
            Ok((shots, out))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ablation {
    NoTrustRegion,
    NoW2,
    NoContrastive,
    NoSpectralPe,
}

impl Ablation {
    pub const ALL: [Ablation; 4] = [
        Ablation::NoTrustRegion,
        Ablation::NoW2,
        Ablation::NoContrastive,
        Ablation::NoSpectralPe,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Ablation::NoTrustRegion => "no_tr",
            Ablation::NoW2 => "no_w2",
            Ablation::NoContrastive => "no_cl",
            Ablation::NoSpectralPe => "no_pe",
        }
    }
}

impl fmt::Display for Ablation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Ablation {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ablation::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| BenchError::Config(format!("unknown ablation `{s}`")))
    }
}

/// UQ-QAOA at the training size with one component removed. The trust-region
/// ablation reuses `full` when given; the others retrain.
pub fn ablation(
    records: &[Record],
    cfg: &ExperimentConfig,
    which: Ablation,
    full: Option<&[SeedModels]>,
) -> Result<Evaluation, BenchError> {
    let inst = test_instances(records, cfg.train_n, None);
    let mut settings = EvalSettings::from_config(cfg);
    settings.methods = vec![Method::UqQaoa];
    let tr = labelled(records, Split::Train, &Family::ALL)?;
    let va = labelled(records, Split::Val, &Family::ALL)?;
    let mut out = Evaluation::default();
    for &seed in &cfg.seeds {
        let mut tcfg = cfg.training_for(seed);
        match which {
            Ablation::NoTrustRegion => settings.trust_region = false,
            Ablation::NoW2 => tcfg.lambda_w = 0.0,
            Ablation::NoContrastive => tcfg.lambda_c = 0.0,
            Ablation::NoSpectralPe => tcfg.k = 0,
        }
        let reused = match (which, full) {
            (Ablation::NoTrustRegion, Some(ms)) => {
                ms.iter().find(|m| m.seed == seed).map(|m| m.uq.clone())
            }
            _ => None,
        };
        let uq = match reused {
            Some(uq) => uq,
            None => train_uq(&tr, &va, &tcfg)?,
        };
        let models = EvalModels {
            seed,
            uq: Some(&uq),
            point: None,
            inputs: None,
        };
        out.extend(evaluate(&inst, models, &settings)?);
    }
    Ok(out)
}

/// Retrains on the other three families and evaluates every method on the
/// held-out family's test graphs at the training size.
pub fn leave_one_family_out(
    records: &[Record],
    cfg: &ExperimentConfig,
    held_out: Family,
) -> Result<Evaluation, BenchError> {
    let keep: Vec<Family> = Family::ALL.into_iter().filter(|f| *f != held_out).collect();
    let kept: Vec<Record> = records
        .iter()
        .filter(|r| r.split == Split::Test || keep.contains(&r.graph.family()))
        .cloned()
        .collect();
    let tr = labelled(&kept, Split::Train, &keep)?;
    let va = labelled(&kept, Split::Val, &keep)?;
    let inputs = baseline_inputs(&kept)?;
    let inst = test_instances(records, cfg.train_n, Some(held_out));
    let settings = EvalSettings::from_config(cfg);
    let mut out = Evaluation::default();
    for &seed in &cfg.seeds {
        let tcfg = cfg.training_for(seed);
        let uq = train_uq(&tr, &va, &tcfg)?;
        let (point, _) = train_point(&tr, &va, &tcfg)?;
        let models = EvalModels {
            seed,
            uq: Some(&uq),
            point: Some(&point),
            inputs: Some(&inputs),
        };
        out.extend(evaluate(&inst, models, &settings)?);
    }
    Ok(out)
}

/// UQ-QAOA at the training size under each loss-weight variation of the
/// preset, for the first configured seed.
pub fn sensitivity(
    records: &[Record],
    cfg: &ExperimentConfig,
) -> Result<Vec<(String, Summary)>, BenchError> {
    let seed = *cfg
        .seeds
        .first()
        .ok_or_else(|| BenchError::Config("no seeds configured".into()))?;
    let tr = labelled(records, Split::Train, &Family::ALL)?;
    let va = labelled(records, Split::Val, &Family::ALL)?;
    let inst = test_instances(records, cfg.train_n, None);
    let mut settings = EvalSettings::from_config(cfg);
    settings.methods = vec![Method::UqQaoa];
    let mut out = Vec::new();
    for (label, key, value) in SENSITIVITY_PRESET {
        let mut varied = cfg.clone();
        varied.set(key, &value.to_string())?;
        let uq = train_uq(&tr, &va, &varied.training_for(seed))?;
        let models = EvalModels {
            seed,
            uq: Some(&uq),
            point: None,
            inputs: None,
        };
        let eval = evaluate(&inst, models, &settings)?;
        if let Some(s) = summarize(&eval.rows).into_iter().next() {
            out.push((label.to_string(), s));
        }
    }
    Ok(out)
}

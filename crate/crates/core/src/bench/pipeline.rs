//! Target generation, per-seed training and per-instance evaluation.

use std::fmt::Write as _;

use super::config::ExperimentConfig;
use super::dataset::{Record, Split};
use super::targets::find_target;
use super::BenchError;
use crate::baselines::{self, median_angles, KnnIndex};
use crate::calibration::CalibrationConstants;
use crate::graph::{Family, Graph};
use crate::objective::{Method, RunResult};
use crate::predictor::{train, Checkpoint, GinModel, HeadKind, TrainingConfig, TrainingLogRow};
use crate::qaoa::{CutTable, NoiseModel};
use crate::rng::{derive_seed, label};
use crate::search::{uq_qaoa_infer, Radius, UncertaintyScale, UqConfig};

/// Fills in missing targets for records in `splits`. Returns how many
/// targets were computed.
pub fn attach_targets(
    records: &mut [Record],
    cfg: &ExperimentConfig,
    splits: &[Split],
) -> Result<usize, BenchError> {
    let mut done = 0;
    for r in records.iter_mut() {
        if r.target.is_some() || !splits.contains(&r.split) {
            continue;
        }
        let table = CutTable::new(&r.graph)?;
        let seed = derive_seed(r.graph.seed(), label("target"));
        let t = find_target(
            &table,
            cfg.p,
            cfg.target_restarts,
            cfg.target_iters,
            cfg.canonical_targets,
            seed,
        )?;
        r.target = Some(t.theta);
        done += 1;
    }
    Ok(done)
}

/// `(graph, target)` pairs of one split, optionally restricted to families.
pub fn labelled(
    records: &[Record],
    split: Split,
    families: &[Family],
) -> Result<Vec<(Graph, Vec<f64>)>, BenchError> {
    records
        .iter()
        .filter(|r| r.split == split && families.contains(&r.graph.family()))
        .map(|r| Ok((r.graph.clone(), r.target()?.to_vec())))
        .collect()
}

/// Validation-fitted uncertainty scale and conformal scores.
pub fn calibrate(
    model: &GinModel,
    val: &[(Graph, Vec<f64>)],
) -> Result<CalibrationConstants, BenchError> {
    let preds = val
        .iter()
        .map(|(g, _)| model.predict(g))
        .collect::<Result<Vec<_>, _>>()?;
    let targets: Vec<Vec<f64>> = val.iter().map(|(_, t)| t.clone()).collect();
    Ok(CalibrationConstants::fit(&preds, &targets)?)
}

/// A trained Gaussian predictor with its calibration.
#[derive(Debug, Clone)]
pub struct UqModel {
    pub checkpoint: Checkpoint,
    pub calibration: CalibrationConstants,
    pub log: Vec<TrainingLogRow>,
}

impl UqModel {
    pub fn scale(&self) -> UncertaintyScale {
        UncertaintyScale {
            u_med: self.calibration.u_med,
            u_iqr: self.calibration.u_iqr,
        }
    }
}

pub fn train_uq(
    train_set: &[(Graph, Vec<f64>)],
    val_set: &[(Graph, Vec<f64>)],
    cfg: &TrainingConfig,
) -> Result<UqModel, BenchError> {
    let trained = train(train_set, val_set, cfg)?;
    let calibration = calibrate(&trained.model, val_set)?;
    Ok(UqModel {
        checkpoint: Checkpoint {
            model: trained.model,
            u_med: Some(calibration.u_med),
            u_iqr: Some(calibration.u_iqr),
        },
        calibration,
        log: trained.log,
    })
}

pub fn train_point(
    train_set: &[(Graph, Vec<f64>)],
    val_set: &[(Graph, Vec<f64>)],
    cfg: &TrainingConfig,
) -> Result<(GinModel, Vec<TrainingLogRow>), BenchError> {
    let cfg = TrainingConfig {
        head: HeadKind::Point,
        ..cfg.clone()
    };
    let trained = train(train_set, val_set, &cfg)?;
    Ok((trained.model, trained.log))
}

/// Both models of one training seed.
#[derive(Debug, Clone)]
pub struct SeedModels {
    pub seed: u64,
    pub uq: UqModel,
    pub point: GinModel,
    pub point_log: Vec<TrainingLogRow>,
}

pub fn train_models(
    records: &[Record],
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<SeedModels, BenchError> {
    let tr = labelled(records, Split::Train, &Family::ALL)?;
    let va = labelled(records, Split::Val, &Family::ALL)?;
    if tr.is_empty() {
        return Err(BenchError::Missing("training split is empty".into()));
    }
    let tcfg = cfg.training_for(seed);
    let uq = train_uq(&tr, &va, &tcfg)?;
    let (point, point_log) = train_point(&tr, &va, &tcfg)?;
    Ok(SeedModels {
        seed,
        uq,
        point,
        point_log,
    })
}

/// What the non-learned baselines need from the training split.
#[derive(Debug, Clone)]
pub struct BaselineInputs {
    pub median: Vec<f64>,
    pub knn: KnnIndex,
}

pub fn baseline_inputs(records: &[Record]) -> Result<BaselineInputs, BenchError> {
    let tr = labelled(records, Split::Train, &Family::ALL)?;
    let graphs: Vec<Graph> = tr.iter().map(|(g, _)| g.clone()).collect();
    let targets: Vec<Vec<f64>> = tr.iter().map(|(_, t)| t.clone()).collect();
    Ok(BaselineInputs {
        median: median_angles(&targets)?,
        knn: KnnIndex::fit(&graphs, &targets)?,
    })
}

/// One line of a results file.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub instance: String,
    pub family: Family,
    pub n: usize,
    pub method: Method,
    pub seed: u64,
    pub evals: usize,
    pub best_f: f64,
    pub ratio: f64,
    pub wall_ms: f64,
}

/// Uncertainty and allocated budget of one UQ-QAOA run.
#[derive(Debug, Clone, PartialEq)]
pub struct UqDetail {
    pub instance: String,
    pub family: Family,
    pub n: usize,
    pub seed: u64,
    pub uncertainty: f64,
    pub z: f64,
    pub samples: usize,
    pub iterations: usize,
    pub evals: usize,
    pub ratio: f64,
}

pub const RESULTS_HEADER: &str = "instance,family,n,method,seed,evals,best_f,ratio,wall_ms";
pub const DETAILS_HEADER: &str =
    "instance,family,n,seed,uncertainty,z,samples,iterations,evals,ratio";

pub fn results_csv(rows: &[ResultRow]) -> String {
    let mut s = format!("{RESULTS_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{:.9},{:.6},{:.3}",
            r.instance, r.family, r.n, r.method, r.seed, r.evals, r.best_f, r.ratio, r.wall_ms
        );
    }
    s
}

fn csv_field<T: std::str::FromStr>(tok: Option<&str>, line: usize) -> Result<T, BenchError> {
    let t = tok.ok_or_else(|| BenchError::Parse(format!("line {line}: too few columns")))?;
    t.parse()
        .map_err(|_| BenchError::Parse(format!("line {line}: bad value `{t}`")))
}

pub fn parse_results_csv(text: &str) -> Result<Vec<ResultRow>, BenchError> {
    let mut lines = text.lines();
    if lines.next() != Some(RESULTS_HEADER) {
        return Err(BenchError::Parse("results header mismatch".into()));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let ln = i + 2;
            let mut c = l.split(',');
            let instance = csv_field::<String>(c.next(), ln)?;
            let family = csv_field::<String>(c.next(), ln)?
                .parse::<Family>()
                .map_err(|e| BenchError::Parse(e.to_string()))?;
            let n = csv_field(c.next(), ln)?;
            let method = csv_field::<String>(c.next(), ln)?
                .parse::<Method>()
                .map_err(BenchError::Parse)?;
            Ok(ResultRow {
                instance,
                family,
                n,
                method,
                seed: csv_field(c.next(), ln)?,
                evals: csv_field(c.next(), ln)?,
                best_f: csv_field(c.next(), ln)?,
                ratio: csv_field(c.next(), ln)?,
                wall_ms: csv_field(c.next(), ln)?,
            })
        })
        .collect()
}

pub fn details_csv(rows: &[UqDetail]) -> String {
    let mut s = format!("{DETAILS_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{:.9},{:.6},{},{},{},{:.6}",
            r.instance,
            r.family,
            r.n,
            r.seed,
            r.uncertainty,
            r.z,
            r.samples,
            r.iterations,
            r.evals,
            r.ratio
        );
    }
    s
}

pub fn parse_details_csv(text: &str) -> Result<Vec<UqDetail>, BenchError> {
    let mut lines = text.lines();
    if lines.next() != Some(DETAILS_HEADER) {
        return Err(BenchError::Parse("details header mismatch".into()));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let ln = i + 2;
            let mut c = l.split(',');
            let instance = csv_field::<String>(c.next(), ln)?;
            let family = csv_field::<String>(c.next(), ln)?
                .parse::<Family>()
                .map_err(|e| BenchError::Parse(e.to_string()))?;
            Ok(UqDetail {
                instance,
                family,
                n: csv_field(c.next(), ln)?,
                seed: csv_field(c.next(), ln)?,
                uncertainty: csv_field(c.next(), ln)?,
                z: csv_field(c.next(), ln)?,
                samples: csv_field(c.next(), ln)?,
                iterations: csv_field(c.next(), ln)?,
                evals: csv_field(c.next(), ln)?,
                ratio: csv_field(c.next(), ln)?,
            })
        })
        .collect()
}

/// Everything that stays fixed across the instances of one evaluation.
#[derive(Debug, Clone)]
pub struct EvalSettings {
    pub methods: Vec<Method>,
    pub p: usize,
    pub t_base: usize,
    pub noise: NoiseModel,
    pub alpha: f64,
    pub conformal: bool,
    /// False for the trust-region ablation.
    pub trust_region: bool,
    pub timing: bool,
    pub baselines: baselines::BaselineConfig,
    pub master_seed: u64,
}

impl EvalSettings {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        EvalSettings {
            methods: cfg.methods.clone(),
            p: cfg.p,
            t_base: cfg.t_base,
            noise: NoiseModel {
                epsilon: cfg.epsilon,
                shots: cfg.shots,
            },
            alpha: cfg.alpha,
            conformal: cfg.conformal,
            trust_region: true,
            timing: cfg.timing,
            baselines: cfg.baselines.clone(),
            master_seed: cfg.seed,
        }
    }

    pub fn uq_config(&self, model: &UqModel) -> Result<UqConfig, BenchError> {
        let radius = if self.conformal {
            Radius::Fixed(model.calibration.conformal_quantile(1.0 - self.alpha)?)
        } else {
            Radius::Chi2 { alpha: self.alpha }
        };
        Ok(UqConfig {
            radius,
            t_base: self.t_base,
            trust_region: self.trust_region,
        })
    }

    /// Seed of every run on `instance` under training seed `seed`; shared by
    /// all methods.
    pub fn run_seed(&self, seed: u64, instance: &str) -> u64 {
        derive_seed(derive_seed(self.master_seed, seed), label(instance))
    }
}

#[derive(Debug, Clone, Default)]
pub struct Evaluation {
    pub rows: Vec<ResultRow>,
    pub details: Vec<UqDetail>,
}

impl Evaluation {
    pub fn extend(&mut self, other: Evaluation) {
        self.rows.extend(other.rows);
        self.details.extend(other.details);
    }
}

/// Models available to an evaluation; methods whose model is absent are
/// skipped.
#[derive(Clone, Copy)]
pub struct EvalModels<'a> {
    pub seed: u64,
    pub uq: Option<&'a UqModel>,
    pub point: Option<&'a GinModel>,
    pub inputs: Option<&'a BaselineInputs>,
}

impl<'a> EvalModels<'a> {
    pub fn from_seed(m: &'a SeedModels, inputs: &'a BaselineInputs) -> Self {
        EvalModels {
            seed: m.seed,
            uq: Some(&m.uq),
            point: Some(&m.point),
            inputs: Some(inputs),
        }
    }
}

pub fn evaluate(
    instances: &[&Record],
    models: EvalModels<'_>,
    s: &EvalSettings,
) -> Result<Evaluation, BenchError> {
    s.noise.validate()?;
    let mut out = Evaluation::default();
    let uq_cfg = models.uq.map(|m| s.uq_config(m)).transpose()?;
    for r in instances {
        let g = &r.graph;
        let table = CutTable::new(g)?;
        let seed = s.run_seed(models.seed, &r.id);
        for &method in &s.methods {
            let b = &s.baselines;
            let res: Option<RunResult> = match method {
                Method::Random => Some(baselines::random_restarts(&table, s.p, b, s.noise, seed)?),
                Method::Heuristic => models
                    .inputs
                    .map(|i| {
                        baselines::concentration_heuristic(&table, &i.median, b, s.noise, seed)
                    })
                    .transpose()?,
                Method::Knn => models
                    .inputs
                    .map(|i| baselines::knn(&table, g, &i.knn, b, s.noise, seed))
                    .transpose()?,
                Method::Tqa => Some(baselines::tqa(&table, s.p, b, s.noise, seed)?),
                Method::GnnPoint => match models.point {
                    Some(m) => {
                        let mu = m.predict(g)?.mu;
                        Some(baselines::gnn_point(
                            &table, &mu, s.t_base, b, s.noise, seed,
                        )?)
                    }
                    None => None,
                },
                Method::UqQaoa => match (models.uq, &uq_cfg) {
                    (Some(m), Some(c)) => {
                        let pred = m.checkpoint.model.predict(g)?;
                        let run = uq_qaoa_infer(&table, &pred, m.scale(), c, s.noise, seed)?;
                        out.details.push(UqDetail {
                            instance: r.id.clone(),
                            family: g.family(),
                            n: g.n(),
                            seed: models.seed,
                            uncertainty: run.uncertainty,
                            z: run.allocation.z,
                            samples: run.allocation.samples,
                            iterations: run.allocation.iterations,
                            evals: run.result.evals_used,
                            ratio: run.result.ratio,
                        });
                        Some(run.result)
                    }
                    _ => None,
                },
            };
            if let Some(res) = res {
                out.rows.push(ResultRow {
                    instance: r.id.clone(),
                    family: g.family(),
                    n: g.n(),
                    method,
                    seed: models.seed,
                    evals: res.evals_used,
                    best_f: res.best_f,
                    ratio: res.ratio,
                    wall_ms: if s.timing { res.wall_ms } else { 0.0 },
                });
            }
        }
    }
    Ok(out)
}

/// Test records of size `n`, optionally restricted to one family.
pub fn test_instances(records: &[Record], n: usize, family: Option<Family>) -> Vec<&Record> {
    records
        .iter()
        .filter(|r| {
            r.split == Split::Test
                && r.graph.n() == n
                && family.is_none_or(|f| r.graph.family() == f)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn results_round_trip() {
        let rows = vec![ResultRow {
            instance: "test-ER-8-0".into(),
            family: Family::Er,
            n: 8,
            method: Method::Tqa,
            seed: 3,
            evals: 91,
            best_f: 10.123456789,
            ratio: 0.9,
            wall_ms: 12.5,
        }];
        let text = results_csv(&rows);
        assert_eq!(parse_results_csv(&text).unwrap(), rows);
        assert!(parse_results_csv("bad header\n").is_err());
    }
}

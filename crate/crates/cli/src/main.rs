//! Command-line harness: dataset generation, targets, training, evaluation,
//! calibration, bounds, reports and the sensitivity sweep.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qaoa_trust::bench::bounds::{bound_table, BoundInputs};
use qaoa_trust::bench::dataset::{generate_dataset, read_dataset, write_dataset};
use qaoa_trust::bench::experiments::{self, Ablation};
use qaoa_trust::bench::pipeline::{
    attach_targets, baseline_inputs, calibrate, details_csv, labelled, parse_details_csv,
    parse_results_csv, results_csv, train_models, Evaluation, SeedModels, UqModel,
};
use qaoa_trust::bench::report::{calibration_spearman, write_report};
use qaoa_trust::bench::{BenchError, ExperimentConfig, Record, Split};
use qaoa_trust::calibration::coverage;
use qaoa_trust::graph::Family;
use qaoa_trust::predictor::{load_checkpoint, log_csv, save_checkpoint, Checkpoint};

#[derive(Parser)]
#[command(
    name = "qaoa-trust",
    version,
    about = "Uncertainty-aware warm starts for MaxCut QAOA"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, or the training seed for `train`, `calibrate` and `evaluate`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Shot budget per evaluation; exact expectations when absent.
    #[arg(long, global = true)]
    shots: Option<u32>,
    /// Trust-region confidence level.
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Use the conformal radius instead of the chi-square quantile.
    #[arg(long, global = true)]
    conformal: bool,
    #[arg(long, global = true)]
    tbase: Option<usize>,
    /// Working directory for every input and output file.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Sample graphs and write `dataset.txt`.
    Generate,
    /// Compute reference angles for the training and validation graphs.
    Targets,
    /// Train the Gaussian and point predictors for each seed.
    Train,
    /// Refit calibration constants on the validation split.
    Calibrate,
    /// Run the benchmark and write results CSVs.
    Evaluate {
        #[arg(long, value_enum, default_value_t = Experiment::Main)]
        experiment: Experiment,
    },
    /// Print the plug-in bound table.
    Bounds,
    /// Aggregate a results file into tables and figure data.
    Report {
        /// Results file inside `--out`.
        #[arg(long, default_value = "results.csv")]
        results: String,
    },
    /// Retrain under the loss-weight sensitivity preset.
    Sensitivity,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Experiment {
    Main,
    Shots,
    Ablations,
    Lofo,
    All,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

/// Config from `--config` (or the copy saved by `generate`), then flag
/// overrides.
fn load_config(c: &Common) -> Result<ExperimentConfig, BenchError> {
    let saved = c.out.join("config.txt");
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::parse(&fs::read_to_string(p)?)?,
        None if saved.exists() => ExperimentConfig::parse(&fs::read_to_string(&saved)?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = c.shots {
        cfg.shots = Some(s);
    }
    if let Some(a) = c.alpha {
        cfg.alpha = a;
    }
    if c.conformal {
        cfg.conformal = true;
    }
    if let Some(t) = c.tbase {
        cfg.t_base = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn dataset_path(out: &Path) -> PathBuf {
    out.join("dataset.txt")
}

fn load_records(out: &Path) -> Result<Vec<Record>, BenchError> {
    let path = dataset_path(out);
    let text = fs::read_to_string(&path).map_err(|e| {
        BenchError::Missing(format!("{}: {e}; run `generate` first", path.display()))
    })?;
    read_dataset(&text)
}

fn model_path(out: &Path, kind: &str, seed: u64) -> PathBuf {
    out.join("models").join(format!("{kind}_seed{seed}.ckpt"))
}

fn training_seeds(c: &Common, cfg: &ExperimentConfig) -> Vec<u64> {
    c.seed.map_or_else(|| cfg.seeds.clone(), |s| vec![s])
}

fn write(path: &Path, text: &str) -> Result<(), BenchError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn load_checkpoint_file(path: &Path, k: usize) -> Result<Checkpoint, BenchError> {
    if !path.exists() {
        return Err(BenchError::Missing(format!(
            "{}; run `train` first",
            path.display()
        )));
    }
    Ok(load_checkpoint(path, Some(k))?)
}

/// Checkpoints of one seed with calibration refit on the validation split.
fn load_seed_models(
    out: &Path,
    records: &[Record],
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<SeedModels, BenchError> {
    let checkpoint = load_checkpoint_file(&model_path(out, "uq", seed), cfg.k)?;
    let point = load_checkpoint_file(&model_path(out, "point", seed), cfg.k)?.model;
    let val = labelled(records, Split::Val, &Family::ALL)?;
    let calibration = calibrate(&checkpoint.model, &val)?;
    Ok(SeedModels {
        seed,
        uq: UqModel {
            checkpoint,
            calibration,
            log: Vec::new(),
        },
        point,
        point_log: Vec::new(),
    })
}

fn write_evaluation(out: &Path, suffix: &str, eval: &Evaluation) -> Result<(), BenchError> {
    write(
        &out.join(format!("results{suffix}.csv")),
        &results_csv(&eval.rows),
    )?;
    write(
        &out.join(format!("uq_details{suffix}.csv")),
        &details_csv(&eval.details),
    )
}

fn run(cli: &Cli) -> Result<(), BenchError> {
    let c = &cli.common;
    let out = &c.out;
    match &cli.command {
        Command::Generate => {
            let mut cfg = load_config(c)?;
            if let Some(s) = c.seed {
                cfg.seed = s;
            }
            let records = generate_dataset(&cfg)?;
            write(&out.join("config.txt"), &cfg.to_text())?;
            write(&dataset_path(out), &write_dataset(&records))?;
            println!("{} graphs", records.len());
        }
        Command::Targets => {
            let cfg = load_config(c)?;
            let mut records = load_records(out)?;
            let done = attach_targets(&mut records, &cfg, &[Split::Train, Split::Val])?;
            write(&dataset_path(out), &write_dataset(&records))?;
            println!("{done} targets computed");
        }
        Command::Train => {
            let cfg = load_config(c)?;
            let records = load_records(out)?;
            for seed in training_seeds(c, &cfg) {
                let m = train_models(&records, &cfg, seed)?;
                save_checkpoint(
                    &m.uq.checkpoint,
                    &ensure_parent(&model_path(out, "uq", seed))?,
                )?;
                let point = Checkpoint {
                    model: m.point.clone(),
                    u_med: None,
                    u_iqr: None,
                };
                save_checkpoint(&point, &model_path(out, "point", seed))?;
                write(
                    &out.join(format!("train_log_uq_seed{seed}.csv")),
                    &log_csv(&m.uq.log),
                )?;
                write(
                    &out.join(format!("train_log_point_seed{seed}.csv")),
                    &log_csv(&m.point_log),
                )?;
                write(
                    &out.join(format!("calibration_seed{seed}.txt")),
                    &m.uq.calibration.to_text(),
                )?;
            }
        }
        Command::Calibrate => {
            let cfg = load_config(c)?;
            let records = load_records(out)?;
            let val = labelled(&records, Split::Val, &Family::ALL)?;
            for seed in training_seeds(c, &cfg) {
                let path = model_path(out, "uq", seed);
                let mut ck = load_checkpoint_file(&path, cfg.k)?;
                let cal = calibrate(&ck.model, &val)?;
                ck.u_med = Some(cal.u_med);
                ck.u_iqr = Some(cal.u_iqr);
                save_checkpoint(&ck, &path)?;
                write(
                    &out.join(format!("calibration_seed{seed}.txt")),
                    &cal.to_text(),
                )?;
                let level = 1.0 - cfg.alpha;
                match cal.conformal_quantile(level) {
                    Ok(q) => println!(
                        "seed {seed}: u_med {:.6e} u_iqr {:.6e} conformal q {q:.4} (validation coverage {:.3})",
                        cal.u_med,
                        cal.u_iqr,
                        coverage(q, &cal.scores)
                    ),
                    Err(e) => println!("seed {seed}: u_med {:.6e} u_iqr {:.6e} ({e})", cal.u_med, cal.u_iqr),
                }
            }
        }
        Command::Evaluate { experiment } => {
            let cfg = load_config(c)?;
            let records = load_records(out)?;
            let models = training_seeds(c, &cfg)
                .into_iter()
                .map(|s| load_seed_models(out, &records, &cfg, s))
                .collect::<Result<Vec<_>, _>>()?;
            let inputs = baseline_inputs(&records)?;
            let all = *experiment == Experiment::All;
            if all || *experiment == Experiment::Main {
                let eval = experiments::run_benchmark(&records, &cfg, &models, &inputs)?;
                let suffix = cfg.shots.map(|s| format!("_shots{s}")).unwrap_or_default();
                write_evaluation(out, &suffix, &eval)?;
            }
            if all || *experiment == Experiment::Shots {
                for (shots, eval) in experiments::shot_grid(&records, &cfg, &models, &inputs)? {
                    write_evaluation(out, &format!("_shots{shots}"), &eval)?;
                }
            }
            if all || *experiment == Experiment::Ablations {
                let mut seeded = cfg.clone();
                seeded.seeds = models.iter().map(|m| m.seed).collect();
                for a in Ablation::ALL {
                    let eval = experiments::ablation(&records, &seeded, a, Some(&models))?;
                    write_evaluation(out, &format!("_ablation_{a}"), &eval)?;
                }
            }
            if all || *experiment == Experiment::Lofo {
                let mut seeded = cfg.clone();
                seeded.seeds = models.iter().map(|m| m.seed).collect();
                for f in Family::ALL {
                    let eval = experiments::leave_one_family_out(&records, &seeded, f)?;
                    write_evaluation(out, &format!("_lofo_{f}"), &eval)?;
                }
            }
        }
        Command::Bounds => {
            let cfg = load_config(c)?;
            let inputs = BoundInputs {
                p: cfg.p,
                alpha: cfg.alpha,
                sigma: vec![0.15; 2 * cfg.p],
                ..BoundInputs::default()
            };
            let table = bound_table(&inputs)?;
            let text = table.to_csv(&inputs);
            print!("{text}");
            write(&out.join("bounds.csv"), &text)?;
        }
        Command::Report { results } => {
            let path = out.join(results);
            let rows = parse_results_csv(&fs::read_to_string(&path).map_err(|e| {
                BenchError::Missing(format!("{}: {e}; run `evaluate` first", path.display()))
            })?)?;
            let details_name = results.replacen("results", "uq_details", 1);
            let details = match fs::read_to_string(out.join(&details_name)) {
                Ok(t) => parse_details_csv(&t)?,
                Err(_) => Vec::new(),
            };
            let stem = results.trim_end_matches(".csv");
            let dir = out.join(format!("report_{stem}"));
            for p in write_report(&dir, &rows, &details)? {
                println!("wrote {}", p.display());
            }
            if details.len() >= 3 {
                println!(
                    "spearman(U, 1 - r) = {:.3}",
                    calibration_spearman(&details)?
                );
            }
        }
        Command::Sensitivity => {
            let cfg = load_config(c)?;
            let records = load_records(out)?;
            let rows = experiments::sensitivity(&records, &cfg)?;
            let mut text = String::from("variant,evals_mean,evals_std,ratio_mean,ratio_std\n");
            for (label, s) in &rows {
                let _ = writeln!(
                    text,
                    "{label},{:.3},{:.3},{:.4},{:.4}",
                    s.evals_mean, s.evals_std, s.ratio_mean, s.ratio_std
                );
            }
            print!("{text}");
            write(&out.join("sensitivity.csv"), &text)?;
        }
    }
    Ok(())
}

fn ensure_parent(path: &Path) -> Result<PathBuf, BenchError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    Ok(path.to_path_buf())
}

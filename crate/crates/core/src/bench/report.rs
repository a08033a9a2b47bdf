//! Aggregation of result rows into summary tables, significance tests and
//! plot-ready data files.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::pipeline::{ResultRow, UqDetail};
use super::BenchError;
use crate::calibration::reliability_bins;
use crate::graph::Family;
use crate::objective::Method;
use crate::stats::{self, wilcoxon_signed_rank, Wilcoxon};

/// Aggregates of one method over one group of rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub method: Method,
    pub count: usize,
    pub evals_mean: f64,
    pub evals_std: f64,
    pub ratio_mean: f64,
    pub ratio_std: f64,
    pub wall_ms_median: f64,
    /// Median random wall time over this method's median wall time.
    pub speedup: f64,
    /// Mean over paired instances of `1 - evals / evals_random`.
    pub eval_reduction: f64,
    /// `r / (evals / 100)`, averaged per row.
    pub ratio_per_100_evals: f64,
    /// `r / seconds`, averaged per row; NaN without timings.
    pub ratio_per_second: f64,
}

fn pair_key(r: &ResultRow) -> (String, u64) {
    (r.instance.clone(), r.seed)
}

/// One summary per method present in `rows`, in `Method::ALL` order.
/// Reductions and speedups are relative to the random rows of the same
/// group.
pub fn summarize(rows: &[ResultRow]) -> Vec<Summary> {
    let random: Vec<&ResultRow> = rows.iter().filter(|r| r.method == Method::Random).collect();
    let random_evals: HashMap<(String, u64), usize> =
        random.iter().map(|r| (pair_key(r), r.evals)).collect();
    let random_ms = if random.is_empty() {
        f64::NAN
    } else {
        stats::median(&random.iter().map(|r| r.wall_ms).collect::<Vec<_>>())
    };
    Method::ALL
        .into_iter()
        .filter_map(|m| {
            let mine: Vec<&ResultRow> = rows.iter().filter(|r| r.method == m).collect();
            if mine.is_empty() {
                return None;
            }
            let evals: Vec<f64> = mine.iter().map(|r| r.evals as f64).collect();
            let ratio: Vec<f64> = mine.iter().map(|r| r.ratio).collect();
            let ms = stats::median(&mine.iter().map(|r| r.wall_ms).collect::<Vec<_>>());
            let reductions: Vec<f64> = mine
                .iter()
                .filter_map(|r| {
                    random_evals
                        .get(&pair_key(r))
                        .map(|&e| 1.0 - r.evals as f64 / e as f64)
                })
                .collect();
            let per_s: Vec<f64> = mine
                .iter()
                .map(|r| r.ratio / (r.wall_ms / 1000.0))
                .collect();
            let timed = mine.iter().all(|r| r.wall_ms > 0.0);
            Some(Summary {
                method: m,
                count: mine.len(),
                evals_mean: stats::mean(&evals),
                evals_std: stats::std_dev(&evals),
                ratio_mean: stats::mean(&ratio),
                ratio_std: stats::std_dev(&ratio),
                wall_ms_median: ms,
                speedup: if ms > 0.0 { random_ms / ms } else { f64::NAN },
                eval_reduction: if reductions.is_empty() {
                    f64::NAN
                } else {
                    stats::mean(&reductions)
                },
                ratio_per_100_evals: stats::mean(
                    &mine
                        .iter()
                        .map(|r| r.ratio / (r.evals as f64 / 100.0))
                        .collect::<Vec<_>>(),
                ),
                ratio_per_second: if timed { stats::mean(&per_s) } else { f64::NAN },
            })
        })
        .collect()
}

/// Summaries grouped by a key such as size, family or seed.
pub fn summarize_by<K: Ord + Clone>(
    rows: &[ResultRow],
    key: impl Fn(&ResultRow) -> K,
) -> BTreeMap<K, Vec<Summary>> {
    let mut groups: BTreeMap<K, Vec<ResultRow>> = BTreeMap::new();
    for r in rows {
        groups.entry(key(r)).or_default().push(r.clone());
    }
    groups
        .into_iter()
        .map(|(k, g)| (k, summarize(&g)))
        .collect()
}

pub const SUMMARY_HEADER: &str = "group,method,count,evals_mean,evals_std,ratio_mean,ratio_std,wall_ms_median,speedup,eval_reduction,ratio_per_100_evals,ratio_per_second";

pub fn summary_csv<K: std::fmt::Display>(groups: &BTreeMap<K, Vec<Summary>>) -> String {
    let mut s = format!("{SUMMARY_HEADER}\n");
    for (k, sums) in groups {
        for m in sums {
            let _ = writeln!(
                s,
                "{k},{},{},{:.3},{:.3},{:.4},{:.4},{:.3},{:.2},{:.4},{:.4},{:.2}",
                m.method,
                m.count,
                m.evals_mean,
                m.evals_std,
                m.ratio_mean,
                m.ratio_std,
                m.wall_ms_median,
                m.speedup,
                m.eval_reduction,
                m.ratio_per_100_evals,
                m.ratio_per_second
            );
        }
    }
    s
}

/// A paired comparison `a` vs `b` on one metric.
#[derive(Debug, Clone, PartialEq)]
pub struct Significance {
    pub label: String,
    pub test: Wilcoxon,
}

fn paired(
    rows: &[ResultRow],
    a: Method,
    b: Method,
    metric: fn(&ResultRow) -> f64,
) -> (Vec<f64>, Vec<f64>) {
    let bs: HashMap<(String, u64), f64> = rows
        .iter()
        .filter(|r| r.method == b)
        .map(|r| (pair_key(r), metric(r)))
        .collect();
    rows.iter()
        .filter(|r| r.method == a)
        .filter_map(|r| bs.get(&pair_key(r)).map(|v| (metric(r), *v)))
        .unzip()
}

/// Wilcoxon tests of UQ-QAOA against random (evaluations and runtime) and
/// against the point predictor (evaluations). Comparisons without enough
/// non-tied pairs are skipped.
pub fn significance(rows: &[ResultRow]) -> Vec<Significance> {
    let cases: [(&str, Method, fn(&ResultRow) -> f64); 3] = [
        ("uq_qaoa vs random evals", Method::Random, |r| {
            r.evals as f64
        }),
        ("uq_qaoa vs random wall_ms", Method::Random, |r| r.wall_ms),
        ("uq_qaoa vs gnn_point evals", Method::GnnPoint, |r| {
            r.evals as f64
        }),
    ];
    cases
        .into_iter()
        .filter_map(|(label, other, metric)| {
            let (x, y) = paired(rows, Method::UqQaoa, other, metric);
            wilcoxon_signed_rank(&x, &y).ok().map(|test| Significance {
                label: label.to_string(),
                test,
            })
        })
        .collect()
}

pub fn significance_csv(tests: &[Significance]) -> String {
    let mut s = String::from("comparison,n,statistic,z,p_value,effect_size\n");
    for t in tests {
        let w = &t.test;
        let _ = writeln!(
            s,
            "{},{},{},{:.4},{:.3e},{:.3}",
            t.label, w.n, w.statistic, w.z, w.p_value, w.effect_size
        );
    }
    s
}

/// Spearman correlation between uncertainty and `1 - r`.
pub fn calibration_spearman(details: &[UqDetail]) -> Result<f64, BenchError> {
    let u: Vec<f64> = details.iter().map(|d| d.uncertainty).collect();
    let e: Vec<f64> = details.iter().map(|d| 1.0 - d.ratio).collect();
    Ok(stats::spearman(&u, &e)?)
}

pub fn reliability_csv(details: &[UqDetail]) -> Result<String, BenchError> {
    let u: Vec<f64> = details.iter().map(|d| d.uncertainty).collect();
    let e: Vec<f64> = details.iter().map(|d| 1.0 - d.ratio).collect();
    let mut s = String::from("bin,predicted,observed,count\n");
    for (i, b) in reliability_bins(&u, &e, 10)?.iter().enumerate() {
        let _ = writeln!(s, "{i},{:.6},{:.6},{}", b.predicted, b.observed, b.count);
    }
    Ok(s)
}

fn by_method_and_n(rows: &[ResultRow]) -> BTreeMap<(usize, Method), Vec<&ResultRow>> {
    let mut g: BTreeMap<(usize, Method), Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        g.entry((r.n, r.method)).or_default().push(r);
    }
    g
}

pub fn runtime_csv(rows: &[ResultRow]) -> String {
    let mut s = String::from("n,method,wall_ms_median,wall_ms_mean\n");
    for ((n, m), g) in by_method_and_n(rows) {
        let ms: Vec<f64> = g.iter().map(|r| r.wall_ms).collect();
        let _ = writeln!(
            s,
            "{n},{m},{:.3},{:.3}",
            stats::median(&ms),
            stats::mean(&ms)
        );
    }
    s
}

pub fn evals_csv(rows: &[ResultRow]) -> String {
    let mut s = String::from("n,method,evals_mean,evals_std\n");
    for ((n, m), g) in by_method_and_n(rows) {
        let e: Vec<f64> = g.iter().map(|r| r.evals as f64).collect();
        let _ = writeln!(
            s,
            "{n},{m},{:.3},{:.3}",
            stats::mean(&e),
            stats::std_dev(&e)
        );
    }
    s
}

pub fn speedup_csv(rows: &[ResultRow]) -> String {
    let mut s = String::from("n,method,speedup,eval_reduction\n");
    for (n, sums) in summarize_by(rows, |r| r.n) {
        for m in sums {
            let _ = writeln!(
                s,
                "{n},{},{:.3},{:.4}",
                m.method, m.speedup, m.eval_reduction
            );
        }
    }
    s
}

/// Running total of evaluations per method, in row order.
pub fn cumulative_evals_csv(rows: &[ResultRow]) -> String {
    let mut s = String::from("method,index,cumulative_evals\n");
    for m in Method::ALL {
        let mut total = 0;
        for (i, r) in rows.iter().filter(|r| r.method == m).enumerate() {
            total += r.evals;
            let _ = writeln!(s, "{m},{i},{total}");
        }
    }
    s
}

pub fn budget_scatter_csv(details: &[UqDetail]) -> String {
    let mut s = String::from("instance,seed,uncertainty,z,samples,iterations,evals\n");
    for d in details {
        let _ = writeln!(
            s,
            "{},{},{:.9},{:.6},{},{},{}",
            d.instance, d.seed, d.uncertainty, d.z, d.samples, d.iterations, d.evals
        );
    }
    s
}

/// Writes every table and figure file into `dir`; returns the paths.
pub fn write_report(
    dir: &Path,
    rows: &[ResultRow],
    details: &[UqDetail],
) -> Result<Vec<PathBuf>, BenchError> {
    std::fs::create_dir_all(dir)?;
    let mut files: Vec<(&str, String)> = vec![
        (
            "table_by_size.csv",
            summary_csv(&summarize_by(rows, |r| r.n)),
        ),
        (
            "table_by_family.csv",
            summary_csv(&summarize_by(rows, |r| FamilyKey(r.family))),
        ),
        (
            "table_by_seed.csv",
            summary_csv(&summarize_by(rows, |r| r.seed)),
        ),
        ("significance.csv", significance_csv(&significance(rows))),
        ("fig_runtime.csv", runtime_csv(rows)),
        ("fig_evals.csv", evals_csv(rows)),
        ("fig_speedup.csv", speedup_csv(rows)),
        ("fig_cumulative_evals.csv", cumulative_evals_csv(rows)),
        ("fig_budget_scatter.csv", budget_scatter_csv(details)),
    ];
    if details.len() >= 10 {
        files.push(("fig_reliability.csv", reliability_csv(details)?));
    }
    let mut out = Vec::new();
    for (name, text) in files {
        let path = dir.join(name);
        std::fs::write(&path, text)?;
        out.push(path);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct FamilyKey(Family);

impl std::fmt::Display for FamilyKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(instance: &str, method: Method, evals: usize, ratio: f64, ms: f64) -> ResultRow {
        ResultRow {
            instance: instance.into(),
            family: Family::Er,
            n: 8,
            method,
            seed: 0,
            evals,
            best_f: 0.0,
            ratio,
            wall_ms: ms,
        }
    }

    #[test]
    fn reduction_and_speedup() {
        let rows = vec![
            row("a", Method::Random, 100, 0.8, 10.0),
            row("b", Method::Random, 200, 0.8, 30.0),
            row("a", Method::UqQaoa, 50, 0.9, 2.0),
            row("b", Method::UqQaoa, 50, 0.7, 4.0),
        ];
        let s = summarize(&rows);
        assert_eq!(s.len(), 2);
        let uq = &s[1];
        assert_eq!(uq.method, Method::UqQaoa);
        assert!((uq.eval_reduction - 0.625).abs() < 1e-12);
        assert!((uq.speedup - 20.0 / 3.0).abs() < 1e-12);
        assert!((uq.ratio_per_100_evals - 1.6).abs() < 1e-12);
        assert_eq!(s[0].eval_reduction, 0.0);
    }

    #[test]
    fn cumulative_ends_at_total() {
        let rows = vec![
            row("a", Method::Tqa, 7, 0.8, 1.0),
            row("b", Method::Tqa, 9, 0.8, 1.0),
        ];
        let text = cumulative_evals_csv(&rows);
        assert_eq!(text.lines().last(), Some("tqa,1,16"));
    }
}

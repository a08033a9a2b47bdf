//! Graph records and their line format:
//! `split family n seed m i1 j1 ... im jm [theta t1 .. t2p]`.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use super::config::ExperimentConfig;
use super::BenchError;
use crate::graph::{Family, Graph};
use crate::rng::{derive_seed, label};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            _ => Err(BenchError::Parse(format!("unknown split `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    /// `split-FAMILY-n-index`, unique within a dataset.
    pub id: String,
    pub split: Split,
    pub graph: Graph,
    pub target: Option<Vec<f64>>,
}

impl Record {
    pub fn target(&self) -> Result<&[f64], BenchError> {
        self.target
            .as_deref()
            .ok_or_else(|| BenchError::MissingTarget(self.id.clone()))
    }
}

fn record_id(split: Split, family: Family, n: usize, index: usize) -> String {
    format!("{split}-{family}-{n}-{index}")
}

/// Seed of the `index`-th graph of `(split, family, n)` under a master seed.
pub fn graph_seed(master: u64, split: Split, family: Family, n: usize, index: usize) -> u64 {
    let fam = Family::ALL.iter().position(|f| *f == family).unwrap_or(0) as u64;
    derive_seed(
        derive_seed(master, label(split.as_str())),
        (fam << 40) | ((n as u64) << 24) | index as u64,
    )
}

/// Training and validation graphs at `train_n`, test graphs at every size.
pub fn generate_dataset(cfg: &ExperimentConfig) -> Result<Vec<Record>, BenchError> {
    let mut plan = vec![
        (Split::Train, cfg.train_n, cfg.train_per_family),
        (Split::Val, cfg.train_n, cfg.val_per_family),
    ];
    plan.extend(
        cfg.sizes
            .iter()
            .map(|&n| (Split::Test, n, cfg.test_per_family)),
    );
    let mut out = Vec::new();
    for (split, n, count) in plan {
        for family in Family::ALL {
            for i in 0..count {
                let graph = Graph::generate(family, n, graph_seed(cfg.seed, split, family, n, i))?;
                out.push(Record {
                    id: record_id(split, family, n, i),
                    split,
                    graph,
                    target: None,
                });
            }
        }
    }
    Ok(out)
}

pub fn format_record(r: &Record) -> String {
    let g = &r.graph;
    let mut s = format!(
        "{} {} {} {} {}",
        r.split,
        g.family(),
        g.n(),
        g.seed(),
        g.m()
    );
    for (i, j) in g.edges() {
        let _ = write!(s, " {i} {j}");
    }
    if let Some(t) = &r.target {
        s.push_str(" theta");
        for v in t {
            let _ = write!(s, " {v:?}");
        }
    }
    s
}

pub fn write_dataset(records: &[Record]) -> String {
    let mut s = String::new();
    for r in records {
        s.push_str(&format_record(r));
        s.push('\n');
    }
    s
}

fn field<T: FromStr>(tok: Option<&str>, what: &str, line: usize) -> Result<T, BenchError> {
    let t = tok.ok_or_else(|| BenchError::Parse(format!("line {line}: missing {what}")))?;
    t.parse()
        .map_err(|_| BenchError::Parse(format!("line {line}: bad {what} `{t}`")))
}

/// Parses records; ids are assigned by order of appearance within each
/// `(split, family, n)` group.
pub fn read_dataset(text: &str) -> Result<Vec<Record>, BenchError> {
    let mut counters: BTreeMap<(Split, Family, usize), usize> = BTreeMap::new();
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let ln = lineno + 1;
        let mut tok = line.split_whitespace();
        let split: Split = field(tok.next(), "split", ln)?;
        let family: Family = field(tok.next(), "family", ln)?;
        let n: usize = field(tok.next(), "n", ln)?;
        let seed: u64 = field(tok.next(), "seed", ln)?;
        let m: usize = field(tok.next(), "edge count", ln)?;
        let mut edges = Vec::with_capacity(m);
        for _ in 0..m {
            let i: usize = field(tok.next(), "edge endpoint", ln)?;
            let j: usize = field(tok.next(), "edge endpoint", ln)?;
            edges.push((i, j));
        }
        let target = match tok.next() {
            None => None,
            Some("theta") => Some(
                tok.by_ref()
                    .map(|t| field(Some(t), "angle", ln))
                    .collect::<Result<Vec<f64>, _>>()?,
            ),
            Some(other) => {
                return Err(BenchError::Parse(format!(
                    "line {ln}: unexpected `{other}`"
                )))
            }
        };
        if tok.next().is_some() {
            return Err(BenchError::Parse(format!("line {ln}: trailing tokens")));
        }
        let graph = Graph::new(n, edges, family, seed)?;
        let c = counters.entry((split, family, n)).or_insert(0);
        out.push(Record {
            id: record_id(split, family, n, *c),
            split,
            graph,
            target,
        });
        *c += 1;
    }
    Ok(out)
}

//! Replicated experiments: configuration, the catalog, the replication
//! engine and reports.
//!
//! A run is a pure function of its [`ExperimentConfig`]. Replication `r`
//! draws its randomness from the substream `(seed, experiment, r, role)`,
//! so neither the thread count nor the scheduling order can change a byte
//! of the report.

mod experiments;
pub mod oracle;
pub mod stats;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::graph::{GraphSpec, Vertex};
use crate::rng::StreamKey;
use crate::walk::Mode;
use crate::weights::WeightSpec;

/// Confidence level of every reported interval.
pub const CONFIDENCE: f64 = 0.99;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
    Both,
}

impl Format {
    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }

    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "both" => Ok(Format::Both),
            _ => Err(Error::Config(format!("unknown format `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    pub format: Format,
}

/// Experiment-specific knobs. Each experiment accepts a subset of them and
/// rejects the rest.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_fraction: Option<f64>,
    /// Step counts at which running statistics are sampled.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n0: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contrast_replications: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contrast_steps: Option<u64>,
    /// Threshold overrides, by check name.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub thresholds: BTreeMap<String, f64>,
}

impl Params {
    fn set_names(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.lambdas.is_some() {
            out.push("lambdas");
        }
        if self.tail_fraction.is_some() {
            out.push("tail_fraction");
        }
        if self.checkpoints.is_some() {
            out.push("checkpoints");
        }
        if self.n0.is_some() {
            out.push("n0");
        }
        if self.contrast_replications.is_some() {
            out.push("contrast_replications");
        }
        if self.contrast_steps.is_some() {
            out.push("contrast_steps");
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<WeightSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default)]
    pub x0: Vertex,
    pub steps: u64,
    pub replications: u64,
    pub seed: u64,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub output: OutputSpec,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "==")]
    Eq,
}

impl Relation {
    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Relation::Lt => value < threshold,
            Relation::Le => value <= threshold,
            Relation::Gt => value > threshold,
            Relation::Ge => value >= threshold,
            Relation::Eq => value == threshold,
        }
    }
}

/// One pass/fail verdict, with the threshold it was judged against.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub passed: bool,
}

/// A binomial frequency with its Wilson interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frequency {
    pub successes: u64,
    pub trials: u64,
    pub rate: f64,
    pub lo: f64,
    pub hi: f64,
    pub confidence: f64,
}

impl Frequency {
    pub fn new(successes: u64, trials: u64) -> Result<Self> {
        let (lo, hi) = stats::wilson_interval(successes, trials, CONFIDENCE)?;
        Ok(Frequency {
            successes,
            trials,
            rate: successes as f64 / trials as f64,
            lo,
            hi,
            confidence: CONFIDENCE,
        })
    }
}

/// Deterministic description of how a report was produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub crate_version: String,
    pub rng: String,
    pub seed: u64,
    pub replications: u64,
    pub steps: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub experiment: String,
    pub description: String,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub aggregates: BTreeMap<String, Value>,
    /// CSV files written next to the report.
    pub series: Vec<String>,
    pub metadata: Metadata,
    pub config: ExperimentConfig,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// A CSV series produced by an experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

/// Execution knobs that never influence the output.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads for replications; `None` uses rayon's default.
    pub parallel: Option<usize>,
}

/// Catalog entry as shown to users.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentInfo {
    pub id: &'static str,
    pub description: &'static str,
    pub default_config: ExperimentConfig,
}

pub fn list_experiments() -> Vec<ExperimentInfo> {
    experiments::CATALOG
        .iter()
        .map(|e| ExperimentInfo {
            id: e.id,
            description: e.description,
            default_config: (e.defaults)(),
        })
        .collect()
}

pub fn default_config(id: &str) -> Result<ExperimentConfig> {
    Ok((experiments::entry(id)?.defaults)())
}

/// Runs an experiment and returns its report and series without touching
/// the file system.
pub fn execute(config: &ExperimentConfig, options: &RunOptions) -> Result<(Report, Vec<Table>)> {
    let entry = experiments::entry(&config.experiment)?;
    entry.validate(config)?;
    let pool = match options.parallel {
        Some(1) => None,
        k => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(k.unwrap_or(0))
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?,
        ),
    };
    let ctx = Ctx {
        config,
        thresholds: entry.thresholds,
        pool,
    };
    let outcome = (entry.run)(&ctx)?;
    let series = if config.output.format.csv() {
        outcome.tables.iter().map(Table::file_name).collect()
    } else {
        Vec::new()
    };
    let report = Report {
        experiment: entry.id.to_string(),
        description: entry.description.to_string(),
        passed: outcome.checks.iter().all(|c| c.passed),
        checks: outcome.checks,
        aggregates: outcome.aggregates,
        series,
        metadata: Metadata {
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            rng: "sha256 substream keys, chacha8".to_string(),
            seed: config.seed,
            replications: config.replications,
            steps: config.steps,
        },
        config: config.clone(),
    };
    Ok((report, outcome.tables))
}

/// Runs an experiment and writes its outputs under `config.output.dir`,
/// when one is set.
pub fn run_experiment(config: &ExperimentConfig, options: &RunOptions) -> Result<Report> {
    let (report, tables) = execute(config, options)?;
    if let Some(dir) = &config.output.dir {
        write_outputs(&report, &tables, dir, config.output.format)?;
    }
    Ok(report)
}

/// Writes `<experiment>.json` and the CSV series into `dir`; returns the
/// paths written.
pub fn write_outputs(report: &Report, tables: &[Table], dir: &Path, format: Format) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if format.json() {
        let p = dir.join(format!("{}.json", report.experiment));
        fs::write(&p, report.to_json())?;
        written.push(p);
    }
    if format.csv() {
        for t in tables {
            let p = dir.join(t.file_name());
            fs::write(&p, t.to_csv())?;
            written.push(p);
        }
    }
    Ok(written)
}

pub(crate) struct Ctx<'a> {
    pub config: &'a ExperimentConfig,
    thresholds: &'static [(&'static str, Relation, f64)],
    pool: Option<rayon::ThreadPool>,
}

impl Ctx<'_> {
    /// Runs `reps` replications of `f`, each with its own substream, and
    /// returns the results in replication order.
    pub fn replicate<T, F>(&self, role: &str, reps: u64, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64, StreamKey) -> Result<T> + Sync,
    {
        let cfg = self.config;
        let job = |r: u64| {
            f(r, StreamKey::derive(cfg.seed, &cfg.experiment, r, role)).map_err(|e| {
                Error::Replication {
                    replication: r,
                    source: Box::new(e),
                }
            })
        };
        match &self.pool {
            None => (0..reps).map(job).collect(),
            Some(pool) => {
                let all: Vec<Result<T>> = pool.install(|| (0..reps).into_par_iter().map(job).collect());
                all.into_iter().collect()
            }
        }
    }

    /// Judges `value` against the declared (or overridden) threshold.
    pub fn check(&self, name: &str, value: f64) -> Check {
        self.check_as(name, name, value)
    }

    /// Like [`Ctx::check`], for a check reported under `name` that shares
    /// the threshold declared as `key`.
    pub fn check_as(&self, name: &str, key: &str, value: f64) -> Check {
        let (_, relation, default) = self
            .thresholds
            .iter()
            .find(|t| t.0 == key)
            .copied()
            .unwrap_or_else(|| panic!("threshold `{key}` is not declared"));
        let threshold = self.config.params.thresholds.get(key).copied().unwrap_or(default);
        Check {
            name: name.to_string(),
            value,
            relation,
            threshold,
            passed: relation.holds(value, threshold),
        }
    }

    pub fn tail_fraction(&self, default: f64) -> f64 {
        self.config.params.tail_fraction.unwrap_or(default)
    }
}

/// What an experiment hands back to the engine.
#[derive(Default)]
pub(crate) struct Outcome {
    pub checks: Vec<Check>,
    pub aggregates: BTreeMap<String, Value>,
    pub tables: Vec<Table>,
}

impl Outcome {
    pub fn aggregate(&mut self, name: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("aggregate serializes");
        self.aggregates.insert(name.to_string(), v);
    }
}

//! Seeded Monte Carlo experiments with JSON and CSV output.
//!
//! Replica `r` of configuration `c` draws from ChaCha8 stream
//! `(c << 32) | r` of the base seed, so a spec and seed determine every
//! number. Replicas may run concurrently; results are collected in index
//! order.
//!
//! [`persist`] writes `<stem>.json` (spec echo, summaries, analysis,
//! provenance) and `<stem>.csv` (one row per replica with columns
//! `config, param, replica, seed, stream, <metrics…>, error`).

mod fluctuations;
mod runs;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::driving_spec::DrivingSpec;
use crate::error::{invalid, Error, Result};
use crate::io::{csv_err, fmt17, io_err, write_csv};
use crate::measures::MAX_DEPTH;

pub use fluctuations::{
    analytic_covariance, green_covariance, max_rel_error, simulate_bridge_variance, BridgeCheck, FluctAnalysis,
    FluctTime, ORACLE_TOLERANCE,
};
pub use runs::{ldp_analysis, run_chain_convergence, run_fluctuations, run_ldp_slope, run_lln, LdpAnalysis, LdpRow};

pub const RESULT_SCHEMA_VERSION: u32 = 1;

/// Largest admissible number of cells for occupation histograms.
pub const MAX_BINS: usize = 1 << 14;

/// Largest admissible number of steps in one sampled path.
pub const MAX_PATH_STEPS: usize = 1 << 23;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Lln,
    ChainConvergence,
    LdpSlope,
    Fluctuations,
}

/// Full description of an experiment. Every field has a default, so a TOML
/// file only needs the entries it changes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub kappas: Vec<f64>,
    /// Final times for the fluctuation experiment.
    pub times: Vec<f64>,
    pub replicas: usize,
    pub base_seed: u64,
    /// Cells of occupation histograms and path-backed driving measures.
    pub bins: usize,
    /// Minimum time steps per unit time; the sampler also enforces
    /// `n ≥ ⌈64·κ·t⌉`.
    pub steps_per_unit: usize,
    /// Depth of the projective-limit distance.
    pub depth: u32,
    pub r_compact: f64,
    /// Number of time intervals in the Carathéodory comparison.
    pub time_grid: usize,
    pub target: DrivingSpec,
    pub epsilon: f64,
    /// Equally spaced evaluation angles for the fluctuation field.
    pub theta_points: usize,
    pub bridge_samples: usize,
    pub bridge_nodes: usize,
    pub workers: Option<usize>,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            kind: ExperimentKind::Lln,
            kappas: vec![10.0, 100.0, 1000.0],
            times: vec![200.0],
            replicas: 100,
            base_seed: 0,
            bins: 256,
            steps_per_unit: 0,
            depth: 6,
            r_compact: 0.5,
            time_grid: 4,
            target: DrivingSpec::Cosine(0.5),
            epsilon: 0.08,
            theta_points: 8,
            bridge_samples: 1_000_000,
            bridge_nodes: 256,
            workers: None,
            output: None,
        }
    }
}

impl ExperimentSpec {
    pub fn new(kind: ExperimentKind) -> Self {
        let mut spec = Self {
            kind,
            ..Self::default()
        };
        match kind {
            ExperimentKind::Lln => {}
            ExperimentKind::ChainConvergence => {
                spec.kappas = vec![16.0, 64.0, 256.0, 1024.0];
                spec.replicas = 30;
            }
            ExperimentKind::LdpSlope => {
                spec.kappas = vec![4.0, 8.0, 16.0, 32.0];
                spec.replicas = 100_000;
            }
            ExperimentKind::Fluctuations => {
                spec.replicas = 10_000;
                spec.bins = 128;
                spec.steps_per_unit = 1024;
            }
        }
        spec
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Parse {
            input: "experiment config".into(),
            reason: e.to_string(),
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment specs serialize infallibly")
    }

    /// Parameter values of the configurations (`κ`, or `t` for fluctuations).
    pub fn params(&self) -> &[f64] {
        match self.kind {
            ExperimentKind::Fluctuations => &self.times,
            _ => &self.kappas,
        }
    }

    pub fn param_name(&self) -> &'static str {
        match self.kind {
            ExperimentKind::Fluctuations => "t",
            _ => "kappa",
        }
    }

    /// Steps for a path of variance `kappa` on `[0, t]`.
    pub fn steps_for(&self, kappa: f64, t: f64) -> usize {
        let by_rate = (self.steps_per_unit as f64 * t).ceil() as usize;
        crate::circle_bm::min_steps(kappa, t).max(by_rate).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicas == 0 {
            return Err(invalid("replicas", "must be at least 1"));
        }
        if !(1..=MAX_BINS).contains(&self.bins) {
            return Err(invalid("bins", format!("must lie in 1..={MAX_BINS}, got {}", self.bins)));
        }
        if self.depth > MAX_DEPTH {
            return Err(invalid("depth", format!("must lie in 0..={MAX_DEPTH}, got {}", self.depth)));
        }
        if self.params().is_empty() {
            return Err(invalid(
                if self.kind == ExperimentKind::Fluctuations { "times" } else { "kappas" },
                "need at least one value",
            ));
        }
        if self.kappas.iter().any(|k| !k.is_finite() || *k < 0.0) {
            return Err(invalid("kappas", "values must be finite and >= 0"));
        }
        if self.times.iter().any(|t| !t.is_finite() || *t <= 0.0) {
            return Err(invalid("times", "values must be finite and > 0"));
        }
        let t_max = match self.kind {
            ExperimentKind::Fluctuations => self.times.iter().copied().fold(0.0, f64::max),
            _ => 1.0,
        };
        let kappa_max = match self.kind {
            ExperimentKind::Fluctuations => 1.0,
            _ => self.kappas.iter().copied().fold(0.0, f64::max),
        };
        let steps = self.steps_for(kappa_max, t_max);
        if steps > MAX_PATH_STEPS {
            return Err(invalid(
                "kappas",
                format!("a path would need {steps} steps; the cap is {MAX_PATH_STEPS}"),
            ));
        }
        if !(self.r_compact > 0.0 && self.r_compact < 1.0) {
            return Err(invalid("r_compact", format!("must lie in (0, 1), got {}", self.r_compact)));
        }
        if self.time_grid == 0 {
            return Err(invalid("time_grid", "must be at least 1"));
        }
        if self.kind == ExperimentKind::LdpSlope {
            let floor = 4.0 * std::f64::consts::PI / self.bins as f64;
            if !(self.epsilon >= floor) {
                return Err(invalid(
                    "epsilon",
                    format!("must be at least 4π/bins = {floor:.6} for {} bins, got {}", self.bins, self.epsilon),
                ));
            }
        }
        if self.kind == ExperimentKind::Fluctuations {
            if self.theta_points == 0 || self.theta_points > self.bins {
                return Err(invalid("theta_points", format!("must lie in 1..={}", self.bins)));
            }
            if self.bridge_samples < 2 || self.bridge_nodes < 2 {
                return Err(invalid("bridge_samples", "bridge check needs at least 2 samples and 2 nodes"));
            }
        }
        if self.workers == Some(0) {
            return Err(invalid("workers", "must be at least 1"));
        }
        Ok(())
    }
}

/// One replica of one configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub config: usize,
    pub param: f64,
    pub replica: usize,
    pub seed: u64,
    pub stream: u64,
    /// Metric values in the order of [`ExperimentResult::metric_names`];
    /// `None` if the replica failed.
    pub values: Option<Vec<f64>>,
    pub error: Option<String>,
}

/// Mean and standard error of every metric over the successful replicas.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigSummary {
    pub param: f64,
    pub replicas_ok: usize,
    pub failures: usize,
    /// `None` when every replica failed.
    pub mean: Vec<Option<f64>>,
    /// `None` with fewer than two successful replicas.
    pub std_error: Vec<Option<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Analysis {
    Lln,
    ChainConvergence {
        /// Distance between the uniform-driving chain and `e^{−t}z`.
        control_distance: f64,
    },
    LdpSlope(LdpAnalysis),
    Fluctuations(FluctAnalysis),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub spec: ExperimentSpec,
    pub code_version: String,
    pub started_unix: f64,
    pub finished_unix: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub schema_version: u32,
    pub kind: ExperimentKind,
    pub param_name: String,
    pub metric_names: Vec<String>,
    pub summary: Vec<ConfigSummary>,
    pub analysis: Analysis,
    pub provenance: Provenance,
    /// Stored in the CSV file, not the JSON document.
    #[serde(skip)]
    pub records: Vec<Record>,
}

impl ExperimentResult {
    /// Copy with the wall-clock fields zeroed, for reproducibility checks.
    pub fn without_timestamps(&self) -> Self {
        let mut r = self.clone();
        r.provenance.started_unix = 0.0;
        r.provenance.finished_unix = 0.0;
        r
    }

    /// Index of a metric by name.
    pub fn metric(&self, name: &str) -> Option<usize> {
        self.metric_names.iter().position(|m| m == name)
    }

    /// Per-configuration means of one metric, NaN where every replica failed.
    pub fn means(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.metric(name)?;
        Some(self.summary.iter().map(|s| s.mean[i].unwrap_or(f64::NAN)).collect())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("results serialize infallibly")
    }
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

pub(crate) fn stream_for(config: usize, replica: usize) -> u64 {
    ((config as u64) << 32) | replica as u64
}

/// Runs `task(config, param, stream)` for every configuration and replica
/// on up to `spec.workers` threads and returns the records in index order.
pub(crate) fn run_replicas<F>(spec: &ExperimentSpec, task: F) -> Result<Vec<Record>>
where
    F: Fn(usize, f64, u64) -> Result<Vec<f64>> + Sync,
{
    let jobs: Vec<(usize, f64, usize)> = spec
        .params()
        .iter()
        .enumerate()
        .flat_map(|(c, &p)| (0..spec.replicas).map(move |r| (c, p, r)))
        .collect();
    let work = || -> Vec<Record> {
        jobs.par_iter()
            .map(|&(config, param, replica)| {
                let stream = stream_for(config, replica);
                let (values, error) = match task(config, param, stream) {
                    Ok(v) => (Some(v), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                Record {
                    config,
                    param,
                    replica,
                    seed: spec.base_seed,
                    stream,
                    values,
                    error,
                }
            })
            .collect()
    };
    match spec.workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| invalid("workers", e.to_string()))?;
            Ok(pool.install(work))
        }
        None => Ok(work()),
    }
}

pub(crate) fn summarize(spec: &ExperimentSpec, records: &[Record], n_metrics: usize) -> Vec<ConfigSummary> {
    spec.params()
        .iter()
        .enumerate()
        .map(|(c, &param)| {
            let rows: Vec<&Vec<f64>> = records
                .iter()
                .filter(|r| r.config == c)
                .filter_map(|r| r.values.as_ref())
                .collect();
            let failures = records.iter().filter(|r| r.config == c && r.values.is_none()).count();
            let n = rows.len();
            let mut mean = vec![None; n_metrics];
            let mut std_error = vec![None; n_metrics];
            for k in 0..n_metrics {
                if n == 0 {
                    continue;
                }
                let mu = rows.iter().map(|v| v[k]).sum::<f64>() / n as f64;
                mean[k] = Some(mu);
                if n >= 2 {
                    let var = rows.iter().map(|v| (v[k] - mu).powi(2)).sum::<f64>() / (n - 1) as f64;
                    std_error[k] = Some((var / n as f64).sqrt());
                }
            }
            ConfigSummary {
                param,
                replicas_ok: n,
                failures,
                mean,
                std_error,
            }
        })
        .collect()
}

pub(crate) fn assemble(
    spec: &ExperimentSpec,
    metric_names: &[&str],
    records: Vec<Record>,
    analysis: Analysis,
    started_unix: f64,
) -> ExperimentResult {
    ExperimentResult {
        schema_version: RESULT_SCHEMA_VERSION,
        kind: spec.kind,
        param_name: spec.param_name().to_string(),
        metric_names: metric_names.iter().map(|s| s.to_string()).collect(),
        summary: summarize(spec, &records, metric_names.len()),
        analysis,
        provenance: Provenance {
            spec: spec.clone(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix,
            finished_unix: unix_now(),
        },
        records,
    }
}

pub(crate) fn start(spec: &ExperimentSpec, kind: ExperimentKind) -> Result<f64> {
    if spec.kind != kind {
        return Err(invalid("kind", format!("expected a {kind:?} spec, got {:?}", spec.kind)));
    }
    spec.validate()?;
    Ok(unix_now())
}

/// Runs the experiment named by `spec.kind` with its own target,
/// radius and angle grid.
pub fn run(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    match spec.kind {
        ExperimentKind::Lln => run_lln(spec),
        ExperimentKind::ChainConvergence => run_chain_convergence(spec),
        ExperimentKind::LdpSlope => {
            let target = spec.target.measure(spec.bins, spec.base_seed)?;
            run_ldp_slope(spec, &target, spec.epsilon)
        }
        ExperimentKind::Fluctuations => run_fluctuations(spec, &fluctuations::theta_grid(spec.theta_points)),
    }
}

fn stem_with(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// Writes `<stem>.json` and `<stem>.csv`; returns both paths.
pub fn persist(result: &ExperimentResult, stem: &Path) -> Result<(PathBuf, PathBuf)> {
    let json_path = stem_with(stem, "json");
    let csv_path = stem_with(stem, "csv");
    if let Some(dir) = stem.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(&json_path, result.to_json()).map_err(io_err(&json_path))?;
    let mut header = vec!["config", "param", "replica", "seed", "stream"];
    header.extend(result.metric_names.iter().map(String::as_str));
    header.push("error");
    let width = result.metric_names.len();
    write_csv(
        &csv_path,
        &header,
        result.records.iter().map(|r| {
            let mut row = vec![
                r.config.to_string(),
                fmt17(r.param),
                r.replica.to_string(),
                r.seed.to_string(),
                r.stream.to_string(),
            ];
            match &r.values {
                Some(v) => row.extend(v.iter().map(|x| fmt17(*x))),
                None => row.extend(std::iter::repeat_n(String::new(), width)),
            }
            row.push(r.error.clone().unwrap_or_default());
            row
        }),
    )?;
    Ok((json_path, csv_path))
}

/// Reads a result written by [`persist`].
pub fn load(stem: &Path) -> Result<ExperimentResult> {
    let json_path = stem_with(stem, "json");
    let csv_path = stem_with(stem, "csv");
    let text = fs::read_to_string(&json_path).map_err(io_err(&json_path))?;
    let mut result: ExperimentResult = serde_json::from_str(&text).map_err(|e| Error::Format {
        path: json_path.clone(),
        reason: e.to_string(),
    })?;
    if result.schema_version != RESULT_SCHEMA_VERSION {
        return Err(Error::Format {
            path: json_path,
            reason: format!("unsupported schema_version {}", result.schema_version),
        });
    }
    let bad = |reason: String| Error::Format {
        path: csv_path.clone(),
        reason,
    };
    let mut reader = csv::Reader::from_path(&csv_path).map_err(csv_err(&csv_path))?;
    let width = result.metric_names.len();
    for row in reader.records() {
        let row = row.map_err(csv_err(&csv_path))?;
        if row.len() != width + 6 {
            return Err(bad(format!("expected {} fields, found {}", width + 6, row.len())));
        }
        let int = |i: usize| row[i].parse::<u64>().map_err(|e| bad(format!("field {i}: {e}")));
        let float = |i: usize| row[i].parse::<f64>().map_err(|e| bad(format!("field {i}: {e}")));
        let values = if width > 0 && (5..5 + width).all(|i| row[i].is_empty()) {
            None
        } else {
            Some((5..5 + width).map(float).collect::<Result<Vec<_>>>()?)
        };
        let error = &row[5 + width];
        result.records.push(Record {
            config: int(0)? as usize,
            param: float(1)?,
            replica: int(2)? as usize,
            seed: int(3)?,
            stream: int(4)?,
            values,
            error: (!error.is_empty()).then(|| error.to_string()),
        });
    }
    Ok(result)
}

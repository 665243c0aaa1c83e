//! Replicated runs, parameter sweeps and their CSV files.
//!
//! An experiment directory holds:
//!
//! * `config.toml`: the effective configuration,
//! * `metadata.toml`: schema version, generator, seeds and advisories,
//! * `run_NNN.csv`: one row per sample period of replication `NNN`,
//! * `runs.csv`: one summary row per replication,
//! * `aggregate.csv`: mean and Student-t 95% interval of the revenue rate.
//!
//! A sweep directory holds `sweep.csv`, `metadata.toml` and one experiment
//! directory per point under `points/<policy>/<column>=<value>/`.
//!
//! Money is written in exact cents (two decimals); every session's net revenue
//! is rounded to the cent before it is summed, so aggregates are recomputable
//! bit-for-bit from the per-run files.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{param_column_name, parse_config, ConfigError, ExperimentConfig};
use super::HarnessError;
use crate::metrics::{student_t_ci, MetricsError};
use crate::model::session_net_revenue;
use crate::policy::AdmissionKind;
use crate::sim::rng::{replication_seed, RNG_ALGORITHM};
use crate::sim::{run_simulation, RunResult};

pub const SCHEMA_VERSION: u32 = 1;
const CONFIDENCE: f64 = 0.95;

/// Values of one parameter to run under each of several policies.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// Dotted parameter path, e.g. `classes[4].delta`.
    pub param: String,
    pub values: Vec<f64>,
    pub policies: Vec<AdmissionKind>,
}

impl SweepSpec {
    pub fn validate(&self, base: &ExperimentConfig) -> Result<(), ConfigError> {
        let invalid = |field: &str, reason: &str| ConfigError::Invalid {
            field: field.into(),
            reason: reason.into(),
        };
        if self.values.is_empty() {
            return Err(invalid("sweep.values", "must not be empty"));
        }
        if self.policies.is_empty() {
            return Err(invalid("sweep.policies", "must not be empty"));
        }
        for &v in &self.values {
            base.clone().set_param(&self.param, v)?;
        }
        Ok(())
    }

    /// Policies by name and values ascending, duplicates removed.
    fn ordered(&self) -> (Vec<AdmissionKind>, Vec<f64>) {
        let mut policies = self.policies.clone();
        policies.sort_by_key(|p| p.as_str());
        policies.dedup();
        let mut values = self.values.clone();
        values.sort_by(f64::total_cmp);
        values.dedup();
        (policies, values)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub index: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub revenue_cents: i64,
    /// Session arrivals, admitted or not.
    pub arrived: u64,
    pub rejected: u64,
    pub violated: u64,
    /// Completed sessions per class.
    pub completed: Vec<u64>,
}

impl SampleRecord {
    pub fn revenue(&self) -> f64 {
        self.revenue_cents as f64 / 100.0
    }

    pub fn revenue_rate(&self) -> f64 {
        self.revenue() / (self.t_end - self.t_start)
    }

    pub fn completed_total(&self) -> u64 {
        self.completed.iter().sum()
    }
}

/// What one replication leaves on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run: u32,
    pub seed: u64,
    pub duration: f64,
    pub revenue_cents: i64,
    pub in_flight: u64,
    /// In-flight sessions valued at their partial mean wait.
    pub projected_cents: i64,
    pub events: u64,
    pub invariant_violations: u64,
    pub samples: Vec<SampleRecord>,
}

impl RunRecord {
    pub fn revenue_rate(&self) -> f64 {
        self.revenue_cents as f64 / 100.0 / self.duration
    }
}

fn cents(x: f64) -> i64 {
    (x * 100.0).round() as i64
}

/// Books one simulation into sample periods of length `period`.
pub fn record_run(run: u32, result: &RunResult, period: f64) -> RunRecord {
    let duration = result.duration;
    let m = result.classes.len();
    let count = if duration > 0.0 {
        ((duration / period).ceil() as usize).max(1)
    } else {
        0
    };
    let slot = |t: f64| ((t / period).floor() as usize).min(count.saturating_sub(1));
    let mut samples: Vec<SampleRecord> = (0..count)
        .map(|i| SampleRecord {
            index: i,
            t_start: i as f64 * period,
            t_end: ((i + 1) as f64 * period).min(duration),
            revenue_cents: 0,
            arrived: 0,
            rejected: 0,
            violated: 0,
            completed: vec![0; m],
        })
        .collect();
    let mut revenue_cents = 0;
    if count > 0 {
        for c in &result.completions {
            let s = &mut samples[slot(c.completion_time)];
            let v = cents(c.net_revenue);
            s.revenue_cents += v;
            revenue_cents += v;
            s.completed[c.class] += 1;
            if c.mean_wait > result.classes[c.class].q {
                s.violated += 1;
            }
        }
        for s in &result.sessions {
            samples[slot(s.arrival_time)].arrived += 1;
        }
        for r in &result.rejections {
            samples[slot(r.time)].rejected += 1;
        }
    }
    let mut in_flight = 0;
    let mut projected_cents = 0;
    for s in result.in_flight() {
        let class = &result.classes[s.class];
        in_flight += 1;
        projected_cents += cents(session_net_revenue(
            &class.reward,
            s.mean_wait().unwrap_or(0.0),
            class.q,
        ));
    }
    RunRecord {
        run,
        seed: result.seed,
        duration,
        revenue_cents,
        in_flight,
        projected_cents,
        events: result.events_processed,
        invariant_violations: result.invariant_violations.len() as u64,
        samples,
    }
}

/// Summary statistics of one experiment (or one sweep point).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub policy: AdmissionKind,
    pub value: Option<f64>,
    pub rho_total: f64,
    pub replications: usize,
    /// Number of observations behind the interval.
    pub samples: usize,
    pub revenue_mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub reject_frac: f64,
    pub violation_frac: f64,
    pub accepted_rates: Vec<f64>,
}

fn frac(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// With two or more replications the interval is over per-replication rates;
/// a single replication uses its sample periods.
pub fn aggregate_runs(
    policy: AdmissionKind,
    value: Option<f64>,
    rho_total: f64,
    classes: usize,
    runs: &[RunRecord],
) -> AggregateRow {
    let observations: Vec<f64> = match runs {
        [single] => single.samples.iter().map(SampleRecord::revenue_rate).collect(),
        _ => runs.iter().map(RunRecord::revenue_rate).collect(),
    };
    let (mean, half) = match student_t_ci(&observations, CONFIDENCE) {
        Ok(ci) => ci,
        Err(MetricsError::InsufficientSamples(1)) => (observations[0], f64::NAN),
        Err(_) => (f64::NAN, f64::NAN),
    };
    let samples = || runs.iter().flat_map(|r| r.samples.iter());
    let arrived = samples().map(|s| s.arrived).sum();
    let rejected = samples().map(|s| s.rejected).sum();
    let violated = samples().map(|s| s.violated).sum();
    let completed = samples().map(SampleRecord::completed_total).sum();
    let time: f64 = runs.iter().map(|r| r.duration).sum();
    let accepted_rates = (0..classes)
        .map(|i| {
            let n: u64 = samples().map(|s| s.completed[i]).sum();
            if time > 0.0 {
                n as f64 / time
            } else {
                0.0
            }
        })
        .collect();
    AggregateRow {
        policy,
        value,
        rho_total,
        replications: runs.len(),
        samples: observations.len(),
        revenue_mean: mean,
        ci_low: mean - half,
        ci_high: mean + half,
        reject_frac: frac(rejected, arrived),
        violation_frac: frac(violated, completed),
        accepted_rates,
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub runs: Vec<RunRecord>,
    pub aggregate: AggregateRow,
}

fn simulate_one(cfg: &ExperimentConfig, run: u32) -> Result<RunRecord, HarnessError> {
    let seed = replication_seed(cfg.run.seed, u64::from(run));
    let result = run_simulation(cfg, seed)?;
    if let Some(v) = result.invariant_violations.first() {
        return Err(HarnessError::Invariant(format!(
            "seed {seed}: {v} ({} total)",
            result.invariant_violations.len()
        )));
    }
    Ok(record_run(run, &result, cfg.run.sample_period))
}

/// Runs every replication of `cfg` in memory.
pub fn simulate_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput, HarnessError> {
    cfg.validate()?;
    let runs = (0..cfg.run.replications)
        .into_par_iter()
        .map(|r| simulate_one(cfg, r))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(finish_experiment(cfg.clone(), None, runs))
}

fn finish_experiment(
    config: ExperimentConfig,
    value: Option<f64>,
    runs: Vec<RunRecord>,
) -> ExperimentOutput {
    let aggregate = aggregate_runs(
        config.policy.admission,
        value,
        config.total_offered_load(),
        config.classes.len(),
        &runs,
    );
    ExperimentOutput {
        config,
        runs,
        aggregate,
    }
}

/// Runs `cfg` and writes the experiment directory.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<ExperimentOutput, HarnessError> {
    let output = simulate_experiment(cfg)?;
    write_experiment(&output, None, out)?;
    Ok(output)
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub param: String,
    pub column: String,
    pub points: Vec<ExperimentOutput>,
}

impl SweepOutput {
    pub fn rows(&self) -> Vec<AggregateRow> {
        self.points.iter().map(|p| p.aggregate.clone()).collect()
    }

    pub fn point(&self, policy: AdmissionKind, value: f64) -> Option<&ExperimentOutput> {
        self.points
            .iter()
            .find(|p| p.aggregate.policy == policy && p.aggregate.value == Some(value))
    }
}

/// Runs every (policy, value, replication) combination in memory. All points
/// share the same replication seeds.
pub fn simulate_sweep(base: &ExperimentConfig, sweep: &SweepSpec) -> Result<SweepOutput, HarnessError> {
    base.validate()?;
    sweep.validate(base)?;
    let (policies, values) = sweep.ordered();
    let mut configs = Vec::new();
    for &policy in &policies {
        for &v in &values {
            let mut cfg = base.clone();
            cfg.policy.admission = policy;
            cfg.set_param(&sweep.param, v)?;
            configs.push((v, cfg));
        }
    }
    let reps = base.run.replications;
    let jobs: Vec<(usize, u32)> = (0..configs.len())
        .flat_map(|p| (0..reps).map(move |r| (p, r)))
        .collect();
    let mut records = jobs
        .par_iter()
        .map(|&(p, r)| simulate_one(&configs[p].1, r))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter();
    let points = configs
        .into_iter()
        .map(|(v, cfg)| {
            let runs = records.by_ref().take(reps as usize).collect();
            finish_experiment(cfg, Some(v), runs)
        })
        .collect();
    Ok(SweepOutput {
        param: sweep.param.clone(),
        column: param_column_name(&sweep.param),
        points,
    })
}

/// Runs a sweep and writes the sweep directory.
pub fn run_sweep(
    base: &ExperimentConfig,
    sweep: &SweepSpec,
    out: &Path,
) -> Result<SweepOutput, HarnessError> {
    let output = simulate_sweep(base, sweep)?;
    write_sweep(&output, out)?;
    Ok(output)
}

// ---------------------------------------------------------------------------
// Files

#[derive(Debug, Serialize, Deserialize)]
struct Metadata {
    schema_version: u32,
    rng_algorithm: String,
    master_seed: u64,
    replications: u32,
    seeds: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    param: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
    advisories: Vec<String>,
}

fn fmt_money(cents: i64) -> String {
    let sign = if cents < 0 { "-" } else { "" };
    let a = cents.unsigned_abs();
    format!("{sign}{}.{:02}", a / 100, a % 100)
}

fn parse_money(s: &str) -> Option<i64> {
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (whole, frac) = body.split_once('.')?;
    if frac.len() != 2 || whole.is_empty() {
        return None;
    }
    let v = whole.parse::<i64>().ok()? * 100 + frac.parse::<i64>().ok()?;
    Some(if neg { -v } else { v })
}

fn fmt_fixed(x: f64, decimals: usize) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.decimals$}")
    }
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), HarnessError> {
    fs::write(path, contents).map_err(|e| HarnessError::io(path, e))
}

fn read_file(path: &Path) -> Result<String, HarnessError> {
    fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))
}

fn create_dir(path: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(path).map_err(|e| HarnessError::io(path, e))
}

fn csv_text(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<String, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| HarnessError::format(path, e.to_string());
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(row).map_err(fail)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| HarnessError::format(path, e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn class_columns(prefix: &str, m: usize) -> impl Iterator<Item = String> + '_ {
    (1..=m).map(move |i| format!("{prefix}{i}"))
}

fn run_csv(path: &Path, run: &RunRecord, m: usize) -> Result<String, HarnessError> {
    let header: Vec<String> = ["sample", "t_start", "t_end", "revenue", "arrived", "rejected", "violated"]
        .into_iter()
        .map(String::from)
        .chain(class_columns("completed_", m))
        .collect();
    let rows: Vec<Vec<String>> = run
        .samples
        .iter()
        .map(|s| {
            let mut row = vec![
                s.index.to_string(),
                s.t_start.to_string(),
                s.t_end.to_string(),
                fmt_money(s.revenue_cents),
                s.arrived.to_string(),
                s.rejected.to_string(),
                s.violated.to_string(),
            ];
            row.extend(s.completed.iter().map(u64::to_string));
            row
        })
        .collect();
    csv_text(path, &header, &rows)
}

const RUNS_HEADER: [&str; 8] = [
    "run",
    "seed",
    "duration",
    "revenue",
    "in_flight",
    "projected_revenue",
    "events",
    "invariant_violations",
];

fn runs_csv(path: &Path, runs: &[RunRecord]) -> Result<String, HarnessError> {
    let header: Vec<String> = RUNS_HEADER.iter().map(|s| s.to_string()).collect();
    let rows: Vec<Vec<String>> = runs
        .iter()
        .map(|r| {
            vec![
                r.run.to_string(),
                r.seed.to_string(),
                r.duration.to_string(),
                fmt_money(r.revenue_cents),
                r.in_flight.to_string(),
                fmt_money(r.projected_cents),
                r.events.to_string(),
                r.invariant_violations.to_string(),
            ]
        })
        .collect();
    csv_text(path, &header, &rows)
}

fn stat_columns(row: &AggregateRow) -> Vec<String> {
    let mut cells = vec![
        fmt_fixed(row.revenue_mean, 4),
        fmt_fixed(row.ci_low, 4),
        fmt_fixed(row.ci_high, 4),
        fmt_fixed(row.reject_frac, 4),
        fmt_fixed(row.violation_frac, 4),
    ];
    cells.extend(row.accepted_rates.iter().map(|a| fmt_fixed(*a, 6)));
    cells
}

const STAT_HEADER: [&str; 5] = ["revenue_mean", "ci_low", "ci_high", "reject_frac", "violation_frac"];

fn aggregate_csv(path: &Path, row: &AggregateRow) -> Result<String, HarnessError> {
    let header: Vec<String> = ["policy", "rho_total", "replications", "samples"]
        .into_iter()
        .chain(STAT_HEADER)
        .map(String::from)
        .chain(class_columns("a_", row.accepted_rates.len()))
        .collect();
    let mut cells = vec![
        row.policy.as_str().to_string(),
        fmt_fixed(row.rho_total, 4),
        row.replications.to_string(),
        row.samples.to_string(),
    ];
    cells.extend(stat_columns(row));
    csv_text(path, &header, &[cells])
}

/// Text of a sweep table with the given parameter column name.
fn sweep_csv(path: &Path, column: &str, rows: &[AggregateRow]) -> Result<String, HarnessError> {
    let m = rows.first().map_or(0, |r| r.accepted_rates.len());
    let header: Vec<String> = ["policy", column, "rho_total"]
        .into_iter()
        .chain(STAT_HEADER)
        .map(String::from)
        .chain(class_columns("a_", m))
        .collect();
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|row| {
            let mut cells = vec![
                row.policy.as_str().to_string(),
                row.value.map_or_else(String::new, |v| v.to_string()),
                fmt_fixed(row.rho_total, 4),
            ];
            cells.extend(stat_columns(row));
            cells
        })
        .collect();
    csv_text(path, &header, &body)
}

fn metadata_for(output: &ExperimentOutput, param: Option<&str>) -> Metadata {
    Metadata {
        schema_version: SCHEMA_VERSION,
        rng_algorithm: RNG_ALGORITHM.into(),
        master_seed: output.config.run.seed,
        replications: output.config.run.replications,
        seeds: output.runs.iter().map(|r| r.seed).collect(),
        param: param.map(String::from),
        value: output.aggregate.value,
        advisories: output.config.advisories(),
    }
}

fn write_experiment(
    output: &ExperimentOutput,
    param: Option<&str>,
    dir: &Path,
) -> Result<(), HarnessError> {
    create_dir(dir)?;
    let m = output.config.classes.len();
    write_file(&dir.join("config.toml"), output.config.to_text())?;
    let meta = toml::to_string(&metadata_for(output, param)).expect("metadata serialises");
    write_file(&dir.join("metadata.toml"), meta)?;
    for run in &output.runs {
        let path = dir.join(format!("run_{:03}.csv", run.run));
        let text = run_csv(&path, run, m)?;
        write_file(&path, text)?;
    }
    let path = dir.join("runs.csv");
    write_file(&path, runs_csv(&path, &output.runs)?)?;
    let path = dir.join("aggregate.csv");
    write_file(&path, aggregate_csv(&path, &output.aggregate)?)?;
    Ok(())
}

fn point_dir(root: &Path, column: &str, point: &ExperimentOutput) -> PathBuf {
    let value = point.aggregate.value.map_or_else(String::new, |v| v.to_string());
    root.join("points")
        .join(point.aggregate.policy.as_str())
        .join(format!("{column}={value}"))
}

fn write_sweep(output: &SweepOutput, dir: &Path) -> Result<(), HarnessError> {
    create_dir(dir)?;
    for point in &output.points {
        write_experiment(point, Some(&output.param), &point_dir(dir, &output.column, point))?;
    }
    if let Some(first) = output.points.first() {
        let mut meta = metadata_for(first, Some(&output.param));
        meta.value = None;
        let text = toml::to_string(&meta).expect("metadata serialises");
        write_file(&dir.join("metadata.toml"), text)?;
    }
    let path = dir.join("sweep.csv");
    write_file(&path, sweep_csv(&path, &output.column, &output.rows())?)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Verification

fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), HarnessError> {
    let text = read_file(path)?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let fail = |e: csv::Error| HarnessError::format(path, e.to_string());
    let header = reader.headers().map_err(fail)?.iter().map(String::from).collect();
    let rows = reader
        .records()
        .map(|r| r.map(|rec| rec.iter().map(String::from).collect()).map_err(fail))
        .collect::<Result<_, _>>()?;
    Ok((header, rows))
}

fn check_header(path: &Path, found: &[String], expected: &[String]) -> Result<(), HarnessError> {
    let missing: Vec<String> = expected
        .iter()
        .filter(|c| !found.contains(c))
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(HarnessError::MissingColumns {
            path: path.into(),
            columns: missing,
        });
    }
    if found != expected {
        return Err(HarnessError::format(path, "unexpected column order"));
    }
    Ok(())
}

fn cell<T: std::str::FromStr>(path: &Path, line: usize, s: &str) -> Result<T, HarnessError> {
    s.parse()
        .map_err(|_| HarnessError::format(path, format!("row {line}: cannot parse `{s}`")))
}

fn money_cell(path: &Path, line: usize, s: &str) -> Result<i64, HarnessError> {
    parse_money(s).ok_or_else(|| HarnessError::format(path, format!("row {line}: bad amount `{s}`")))
}

fn read_run(path: &Path, summary: &[String], m: usize) -> Result<RunRecord, HarnessError> {
    let (header, rows) = read_csv(path)?;
    let expected: Vec<String> = ["sample", "t_start", "t_end", "revenue", "arrived", "rejected", "violated"]
        .into_iter()
        .map(String::from)
        .chain(class_columns("completed_", m))
        .collect();
    check_header(path, &header, &expected)?;
    let samples = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            Ok(SampleRecord {
                index: cell(path, i, &r[0])?,
                t_start: cell(path, i, &r[1])?,
                t_end: cell(path, i, &r[2])?,
                revenue_cents: money_cell(path, i, &r[3])?,
                arrived: cell(path, i, &r[4])?,
                rejected: cell(path, i, &r[5])?,
                violated: cell(path, i, &r[6])?,
                completed: r[7..]
                    .iter()
                    .map(|c| cell(path, i, c))
                    .collect::<Result<_, _>>()?,
            })
        })
        .collect::<Result<_, HarnessError>>()?;
    let s = summary;
    let runs_path = path.with_file_name("runs.csv");
    Ok(RunRecord {
        run: cell(&runs_path, 0, &s[0])?,
        seed: cell(&runs_path, 0, &s[1])?,
        duration: cell(&runs_path, 0, &s[2])?,
        revenue_cents: money_cell(&runs_path, 0, &s[3])?,
        in_flight: cell(&runs_path, 0, &s[4])?,
        projected_cents: money_cell(&runs_path, 0, &s[5])?,
        events: cell(&runs_path, 0, &s[6])?,
        invariant_violations: cell(&runs_path, 0, &s[7])?,
        samples,
    })
}

/// Outcome of [`verify`]: every mismatch found, by file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerifyReport {
    pub experiments: usize,
    pub runs: usize,
    pub problems: Vec<String>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.problems.is_empty()
    }
}

fn verify_experiment(dir: &Path, report: &mut VerifyReport) -> Result<AggregateRow, HarnessError> {
    let cfg = parse_config(&read_file(&dir.join("config.toml"))?)?;
    let meta_path = dir.join("metadata.toml");
    let meta: Metadata = toml::from_str(&read_file(&meta_path)?)
        .map_err(|e| HarnessError::format(&meta_path, e.message().to_string()))?;
    let m = cfg.classes.len();
    let runs_path = dir.join("runs.csv");
    let (header, summaries) = read_csv(&runs_path)?;
    let expected: Vec<String> = RUNS_HEADER.iter().map(|s| s.to_string()).collect();
    check_header(&runs_path, &header, &expected)?;

    let mut problem = |msg: String| report.problems.push(format!("{}: {msg}", dir.display()));
    if summaries.len() != cfg.run.replications as usize {
        problem(format!(
            "{} runs recorded, config asks for {}",
            summaries.len(),
            cfg.run.replications
        ));
    }
    let mut runs = Vec::new();
    for (i, summary) in summaries.iter().enumerate() {
        let path = dir.join(format!("run_{i:03}.csv"));
        let run = read_run(&path, summary, m)?;
        let expected_seed = replication_seed(cfg.run.seed, i as u64);
        if run.run as usize != i || run.seed != expected_seed {
            problem(format!("run {i}: seed {} does not derive from the master seed", run.seed));
        }
        let booked: i64 = run.samples.iter().map(|s| s.revenue_cents).sum();
        if booked != run.revenue_cents {
            problem(format!(
                "run {i}: samples book {} but the run total is {}",
                fmt_money(booked),
                fmt_money(run.revenue_cents)
            ));
        }
        if run.invariant_violations != 0 {
            problem(format!("run {i}: {} invariant violations", run.invariant_violations));
        }
        runs.push(run);
    }
    let seeds: Vec<u64> = runs.iter().map(|r| r.seed).collect();
    if meta.seeds != seeds || meta.schema_version != SCHEMA_VERSION {
        problem("metadata disagrees with runs.csv".into());
    }
    let row = aggregate_runs(cfg.policy.admission, meta.value, cfg.total_offered_load(), m, &runs);
    let agg_path = dir.join("aggregate.csv");
    if aggregate_csv(&agg_path, &row)? != read_file(&agg_path)? {
        problem("aggregate.csv does not match the per-run files".into());
    }
    report.experiments += 1;
    report.runs += runs.len();
    Ok(row)
}

fn subdirs(dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| HarnessError::io(dir, e))? {
        let entry = entry.map_err(|e| HarnessError::io(dir, e))?;
        if entry.path().is_dir() {
            out.push(entry.path());
        }
    }
    out.sort();
    Ok(out)
}

/// Recomputes every aggregate under `dir` from the per-run files.
pub fn verify(dir: &Path) -> Result<VerifyReport, HarnessError> {
    let mut report = VerifyReport::default();
    let sweep_path = dir.join("sweep.csv");
    if !sweep_path.exists() {
        verify_experiment(dir, &mut report)?;
        return Ok(report);
    }
    let meta_path = dir.join("metadata.toml");
    let meta: Metadata = toml::from_str(&read_file(&meta_path)?)
        .map_err(|e| HarnessError::format(&meta_path, e.message().to_string()))?;
    let param = meta
        .param
        .ok_or_else(|| HarnessError::format(&meta_path, "sweep metadata lacks `param`"))?;
    let mut rows = Vec::new();
    for policy_dir in subdirs(&dir.join("points"))? {
        for point in subdirs(&policy_dir)? {
            rows.push(verify_experiment(&point, &mut report)?);
        }
    }
    rows.sort_by(|a, b| {
        a.policy
            .as_str()
            .cmp(b.policy.as_str())
            .then(a.value.unwrap_or(0.0).total_cmp(&b.value.unwrap_or(0.0)))
    });
    let text = sweep_csv(&sweep_path, &param_column_name(&param), &rows)?;
    if text != read_file(&sweep_path)? {
        report
            .problems
            .push(format!("{}: does not match the point aggregates", sweep_path.display()));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn money_round_trip() {
        for c in [0, 5, -5, 100, -1234, 99_999_999] {
            assert_eq!(parse_money(&fmt_money(c)), Some(c));
        }
        assert_eq!(fmt_money(-5), "-0.05");
        assert_eq!(parse_money("1.5"), None);
        assert_eq!(parse_money("abc"), None);
    }

    #[test]
    fn cents_are_exact() {
        assert_eq!(cents(32.0), 3200);
        assert_eq!(cents(-9.999), -1000);
        assert_eq!(1235.0 / 100.0, "12.35".parse::<f64>().unwrap());
    }
}

//! Python bindings: configuration, single runs, replicated experiments,
//! sweeps and the queueing formulas.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use provisim::harness::{self, ExperimentConfig, HarnessError, SweepSpec};
use provisim::metrics;
use provisim::policy::{threshold_search as search, AdmissionKind, Threshold};
use provisim::queueing;
use provisim::sim::{nominal_estimates, run_simulation};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn harness_err(e: HarnessError) -> PyErr {
    if e.is_config_error() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn parse_kind(name: &str) -> PyResult<AdmissionKind> {
    name.parse().map_err(value_err)
}

/// An experiment configuration.
#[pyclass(name = "Config", module = "pyprovisim", from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: ExperimentConfig,
}

#[pymethods]
impl PyConfig {
    /// Parses the TOML configuration format.
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        let inner = harness::parse_config(text).map_err(value_err)?;
        Ok(Self { inner })
    }

    /// Configuration of a built-in experiment.
    #[staticmethod]
    fn preset(name: &str) -> PyResult<Self> {
        let p = harness::preset(name).ok_or_else(|| PyValueError::new_err(format!("unknown preset `{name}`")))?;
        Ok(Self { inner: p.config })
    }

    fn to_toml(&self) -> String {
        self.inner.to_text()
    }

    /// Sets a parameter by dotted path, e.g. `classes[4].delta`.
    fn set_param(&mut self, path: &str, value: f64) -> PyResult<()> {
        self.inner.set_param(path, value).map_err(value_err)
    }

    fn advisories(&self) -> Vec<String> {
        self.inner.advisories()
    }

    fn offered_loads(&self) -> Vec<f64> {
        self.inner.offered_loads()
    }

    #[getter]
    fn servers(&self) -> u32 {
        self.inner.cluster.servers
    }

    #[getter]
    fn classes(&self) -> usize {
        self.inner.classes.len()
    }

    #[getter]
    fn admission(&self) -> &'static str {
        self.inner.policy.admission.as_str()
    }

    #[setter]
    fn set_admission(&mut self, name: &str) -> PyResult<()> {
        self.inner.policy.admission = parse_kind(name)?;
        Ok(())
    }

    #[getter]
    fn duration(&self) -> f64 {
        self.inner.run.duration
    }

    #[setter]
    fn set_duration(&mut self, v: f64) -> PyResult<()> {
        self.set_param("run.duration", v)
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.run.seed
    }

    #[setter]
    fn set_seed(&mut self, v: u64) {
        self.inner.run.seed = v;
    }

    #[getter]
    fn replications(&self) -> u32 {
        self.inner.run.replications
    }

    #[setter]
    fn set_replications(&mut self, v: u32) -> PyResult<()> {
        if v == 0 {
            return Err(PyValueError::new_err("replications must be >= 1"));
        }
        self.inner.run.replications = v;
        Ok(())
    }

    fn __repr__(&self) -> String {
        format!(
            "Config(N={}, classes={}, admission={}, duration={})",
            self.inner.cluster.servers,
            self.inner.classes.len(),
            self.inner.policy.admission,
            self.inner.run.duration
        )
    }
}

/// Outcome of one simulation run.
#[pyclass(name = "RunSummary", module = "pyprovisim", get_all, skip_from_py_object)]
struct PyRunSummary {
    seed: u64,
    duration: f64,
    sessions: usize,
    completed: usize,
    rejected: usize,
    in_flight: usize,
    events: u64,
    revenue_total: f64,
    revenue_rate: f64,
    revenue_rate_with_in_flight: f64,
    rejection_fraction: f64,
    violation_fraction: f64,
    accepted_rates: Vec<f64>,
    job_arrivals: Vec<u64>,
    jobs_completed: Vec<u64>,
    invariant_violations: Vec<String>,
}

#[pymethods]
impl PyRunSummary {
    fn __repr__(&self) -> String {
        format!(
            "RunSummary(revenue_rate={:.4}, sessions={}, rejected={})",
            self.revenue_rate, self.sessions, self.rejected
        )
    }
}

/// Mean and confidence interval of one experiment point.
#[pyclass(name = "Aggregate", module = "pyprovisim", get_all, skip_from_py_object)]
struct PyAggregate {
    policy: String,
    value: Option<f64>,
    rho_total: f64,
    replications: usize,
    samples: usize,
    revenue_mean: f64,
    ci_low: f64,
    ci_high: f64,
    reject_frac: f64,
    violation_frac: f64,
    accepted_rates: Vec<f64>,
}

impl From<harness::AggregateRow> for PyAggregate {
    fn from(a: harness::AggregateRow) -> Self {
        Self {
            policy: a.policy.as_str().into(),
            value: a.value,
            rho_total: a.rho_total,
            replications: a.replications,
            samples: a.samples,
            revenue_mean: a.revenue_mean,
            ci_low: a.ci_low,
            ci_high: a.ci_high,
            reject_frac: a.reject_frac,
            violation_frac: a.violation_frac,
            accepted_rates: a.accepted_rates,
        }
    }
}

#[pymethods]
impl PyAggregate {
    fn __repr__(&self) -> String {
        format!(
            "Aggregate(policy={}, revenue_mean={:.4}, ci=[{:.4}, {:.4}])",
            self.policy, self.revenue_mean, self.ci_low, self.ci_high
        )
    }
}

/// Runs one simulation; `seed` defaults to the configured one.
#[pyfunction]
#[pyo3(signature = (config, seed=None))]
fn run(py: Python<'_>, config: &PyConfig, seed: Option<u64>) -> PyResult<PyRunSummary> {
    let cfg = config.inner.clone();
    let seed = seed.unwrap_or(cfg.run.seed);
    let result = py
        .detach(|| run_simulation(&cfg, seed))
        .map_err(value_err)?;
    let s = metrics::summarize(&result);
    Ok(PyRunSummary {
        seed,
        duration: result.duration,
        sessions: result.sessions.len(),
        completed: result.completions.len(),
        rejected: result.rejections.len(),
        in_flight: result.in_flight().count(),
        events: result.events_processed,
        revenue_total: s.revenue_total,
        revenue_rate: s.revenue_rate,
        revenue_rate_with_in_flight: s.revenue_rate_with_in_flight,
        rejection_fraction: s.rejection_fraction,
        violation_fraction: s.violation_fraction,
        accepted_rates: s.accepted_rates,
        job_arrivals: result.job_arrivals,
        jobs_completed: result.jobs_completed,
        invariant_violations: result.invariant_violations,
    })
}

/// Runs every replication; writes the result directory when `out` is given.
#[pyfunction]
#[pyo3(signature = (config, out=None))]
fn run_experiment(py: Python<'_>, config: &PyConfig, out: Option<PathBuf>) -> PyResult<PyAggregate> {
    let cfg = config.inner.clone();
    let result = py
        .detach(|| match &out {
            Some(dir) => harness::run_experiment(&cfg, dir),
            None => harness::simulate_experiment(&cfg),
        })
        .map_err(harness_err)?;
    Ok(result.aggregate.into())
}

/// One aggregate per (policy, value), policies by name, values ascending.
#[pyfunction]
#[pyo3(signature = (config, param, values, policies=None, out=None))]
fn sweep(
    py: Python<'_>,
    config: &PyConfig,
    param: String,
    values: Vec<f64>,
    policies: Option<Vec<String>>,
    out: Option<PathBuf>,
) -> PyResult<Vec<PyAggregate>> {
    let policies = match policies {
        Some(names) => names.iter().map(|n| parse_kind(n)).collect::<PyResult<_>>()?,
        None => vec![config.inner.policy.admission],
    };
    let spec = SweepSpec {
        param,
        values,
        policies,
    };
    let cfg = config.inner.clone();
    let result = py
        .detach(|| match &out {
            Some(dir) => harness::run_sweep(&cfg, &spec, dir),
            None => harness::simulate_sweep(&cfg, &spec),
        })
        .map_err(harness_err)?;
    Ok(result.rows().into_iter().map(PyAggregate::from).collect())
}

/// Recomputes a result directory; returns the problems found.
#[pyfunction]
fn verify(dir: PathBuf) -> PyResult<Vec<String>> {
    Ok(harness::verify(&dir).map_err(harness_err)?.problems)
}

/// `(name, description)` of every built-in experiment.
#[pyfunction]
fn list_presets() -> Vec<(String, String)> {
    harness::list_presets()
        .into_iter()
        .map(|p| (p.name, p.description))
        .collect()
}

/// Threshold chosen for a class (1-based) holding `servers` servers at the
/// configured traffic; `None` means no limit.
#[pyfunction]
fn threshold_search(config: &PyConfig, class: usize, servers: u32) -> PyResult<Option<u32>> {
    let classes = config.inner.service_classes();
    let i = class
        .checked_sub(1)
        .filter(|i| *i < classes.len())
        .ok_or_else(|| PyValueError::new_err(format!("no class {class}")))?;
    let estimates = nominal_estimates(&classes, &config.inner.traffic());
    Ok(match search(&classes[i], &estimates[i], servers, config.inner.policy.epsilon) {
        Threshold::Limit(m) => Some(m),
        Threshold::Unbounded => None,
    })
}

#[pyfunction]
fn erlang_b(n: u32, a: f64) -> f64 {
    queueing::erlang_b(n, a)
}

#[pyfunction]
fn erlang_c(n: u32, a: f64) -> PyResult<f64> {
    queueing::erlang_c(n, a).map_err(value_err)
}

#[pyfunction]
fn mmn_expected_wait(lambda: f64, mu: f64, n: u32) -> PyResult<f64> {
    queueing::mmn_expected_wait(lambda, mu, n).map_err(value_err)
}

#[pyfunction]
fn mmn_wait_tail(lambda: f64, mu: f64, n: u32, q: f64) -> PyResult<f64> {
    queueing::mmn_wait_tail(lambda, mu, n, q).map_err(value_err)
}

/// `(mean, half_width)` of a Student t interval.
#[pyfunction]
#[pyo3(signature = (samples, confidence=0.95))]
fn student_t_ci(samples: Vec<f64>, confidence: f64) -> PyResult<(f64, f64)> {
    metrics::student_t_ci(&samples, confidence).map_err(value_err)
}

#[pymodule]
fn pyprovisim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PyRunSummary>()?;
    m.add_class::<PyAggregate>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(list_presets, m)?)?;
    m.add_function(wrap_pyfunction!(threshold_search, m)?)?;
    m.add_function(wrap_pyfunction!(erlang_b, m)?)?;
    m.add_function(wrap_pyfunction!(erlang_c, m)?)?;
    m.add_function(wrap_pyfunction!(mmn_expected_wait, m)?)?;
    m.add_function(wrap_pyfunction!(mmn_wait_tail, m)?)?;
    m.add_function(wrap_pyfunction!(student_t_ci, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}

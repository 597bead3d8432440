//! Python module `cbai`.
//!
//! ```python
//! import cbai
//! exp = cbai.Experiment.from_toml(open("instance.toml").read())
//! print(exp.run()["aggregate"])
//! ```

use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use cbai_core::confidence::{self, RadiusParams};
use cbai_core::harness::{Aggregate, TrialResult};
use cbai_core::{ArmStatistics, CbaiError, ExperimentConfig, PolicyKind, SweepParam};

fn py_err(e: CbaiError) -> PyErr {
    match e {
        CbaiError::Io { .. } => PyOSError::new_err(e.to_string()),
        CbaiError::State(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn trial_dict<'py>(py: Python<'py>, t: &TrialResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("trial", t.trial_index)?;
    d.set_item("tau", t.tau)?;
    d.set_item("recommended", t.recommended)?;
    d.set_item("correct", t.correct)?;
    d.set_item("truncated", t.truncated)?;
    d.set_item("counts", t.counts.clone())?;
    Ok(d)
}

fn aggregate_dict<'py>(py: Python<'py>, a: &Aggregate) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("n_trials", a.n_trials)?;
    d.set_item("mean_tau", a.mean_tau)?;
    d.set_item("std_tau", a.std_tau)?;
    d.set_item("stderr_tau", a.stderr_tau)?;
    d.set_item("error_rate", a.error_rate)?;
    d.set_item("error_ci", a.error_ci)?;
    d.set_item("truncated", a.truncated)?;
    Ok(d)
}

/// A validated experiment: instance, contamination, policy and run settings.
#[pyclass(name = "Experiment", frozen)]
struct PyExperiment {
    inner: ExperimentConfig,
}

fn wrap(r: cbai_core::Result<ExperimentConfig>) -> PyResult<PyExperiment> {
    r.map(|inner| PyExperiment { inner }).map_err(py_err)
}

#[pymethods]
impl PyExperiment {
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        wrap(ExperimentConfig::from_toml(text))
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        wrap(ExperimentConfig::load(&path))
    }

    fn to_toml(&self) -> String {
        self.inner.spec.to_toml()
    }

    fn with_delta(&self, delta: f64) -> PyResult<Self> {
        wrap(self.inner.with_delta(delta))
    }

    fn with_epsilon(&self, epsilon: f64) -> PyResult<Self> {
        wrap(self.inner.with_epsilon(epsilon))
    }

    fn with_policy(&self, name: &str) -> PyResult<Self> {
        let kind: PolicyKind = name.parse().map_err(py_err)?;
        wrap(self.inner.with_policy(kind))
    }

    fn with_trials(&self, n_trials: usize) -> PyResult<Self> {
        wrap(self.inner.with_trials(n_trials))
    }

    #[getter]
    fn num_arms(&self) -> usize {
        self.inner.instance.num_arms()
    }

    #[getter]
    fn best_arm(&self) -> usize {
        self.inner.instance.best_arm()
    }

    #[getter]
    fn true_means(&self) -> Vec<f64> {
        self.inner.instance.true_means()
    }

    #[getter]
    fn policy(&self) -> &'static str {
        self.inner.policy.kind.name()
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.inner.spec.policy.delta
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.inner.contamination.epsilon()
    }

    #[getter]
    fn n_trials(&self) -> usize {
        self.inner.n_trials()
    }

    /// Problem complexity `H` of the instance.
    fn complexity(&self) -> PyResult<f64> {
        let i = &self.inner.instance;
        confidence::problem_complexity(&i.true_means(), i.uncertainty(), i.sigma_proxy())
            .map_err(py_err)
    }

    fn run_trial<'py>(&self, py: Python<'py>, trial_index: u64) -> PyResult<Bound<'py, PyDict>> {
        let inner = &self.inner;
        let t = py
            .detach(|| cbai_core::run_trial(inner, trial_index))
            .map_err(py_err)?;
        trial_dict(py, &t)
    }

    /// Runs every trial; returns `{"aggregate": {...}, "trials": [...]}`.
    fn run<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let inner = &self.inner;
        let report = py
            .detach(|| cbai_core::run_experiment(inner))
            .map_err(py_err)?;
        let trials = report
            .trials
            .iter()
            .map(|t| trial_dict(py, t))
            .collect::<PyResult<Vec<_>>>()?;
        let d = PyDict::new(py);
        d.set_item("aggregate", aggregate_dict(py, &report.aggregate)?)?;
        d.set_item("trials", trials)?;
        Ok(d)
    }

    /// Sweeps `"delta"` or `"epsilon"` over `grid` and returns the CSV table.
    fn sweep(&self, py: Python<'_>, param: &str, grid: Vec<f64>) -> PyResult<String> {
        let param: SweepParam = param.parse().map_err(py_err)?;
        let inner = &self.inner;
        let table = py
            .detach(|| cbai_core::sweep(inner, param, &grid))
            .map_err(py_err)?;
        Ok(table.to_csv(""))
    }

    fn __repr__(&self) -> String {
        format!(
            "Experiment(policy={}, arms={}, epsilon={}, delta={}, n_trials={})",
            self.policy(),
            self.num_arms(),
            self.epsilon(),
            self.delta(),
            self.n_trials()
        )
    }
}

/// Incremental order statistics of one arm's rewards.
#[pyclass(name = "ArmStatistics")]
struct PyArmStatistics {
    inner: ArmStatistics,
}

#[pymethods]
impl PyArmStatistics {
    #[new]
    #[pyo3(signature = (values = None))]
    fn new(values: Option<Vec<f64>>) -> PyResult<Self> {
        let mut s = Self {
            inner: ArmStatistics::new(),
        };
        if let Some(v) = values {
            s.extend(v)?;
        }
        Ok(s)
    }

    fn insert(&mut self, reward: f64) -> PyResult<()> {
        self.inner.insert(reward).map_err(py_err)
    }

    fn extend(&mut self, rewards: Vec<f64>) -> PyResult<()> {
        rewards.into_iter().try_for_each(|r| self.insert(r))
    }

    fn __len__(&self) -> usize {
        self.inner.count()
    }

    fn mean(&self) -> PyResult<f64> {
        self.inner.mean().map_err(py_err)
    }

    fn trimmed_mean(&self, alpha: f64) -> PyResult<f64> {
        self.inner.trimmed_mean(alpha).map_err(py_err)
    }

    fn median(&self) -> PyResult<f64> {
        self.inner.empirical_median().map_err(py_err)
    }

    fn sorted(&self) -> Vec<f64> {
        self.inner.sorted()
    }
}

#[pyfunction]
fn trimmed_mean(values: Vec<f64>, alpha: f64) -> PyResult<f64> {
    PyArmStatistics::new(Some(values))?.trimmed_mean(alpha)
}

#[pyfunction]
fn median(values: Vec<f64>) -> PyResult<f64> {
    PyArmStatistics::new(Some(values))?.median()
}

#[pyfunction]
fn exploration_floor(alpha: f64, delta: f64) -> PyResult<f64> {
    confidence::exploration_floor(alpha, delta).map_err(py_err)
}

/// Radius of the gap-based policy after `n_pulls` pulls of an arm at time `t`.
#[pyfunction]
fn gap_radius(
    sigma: f64,
    epsilon: f64,
    num_arms: usize,
    delta: f64,
    n_pulls: u64,
    t: u64,
) -> PyResult<f64> {
    let p = RadiusParams::new(sigma, epsilon, num_arms, delta).map_err(py_err)?;
    confidence::beta_gap_radius(&p, n_pulls, t).map_err(py_err)
}

/// Radius of the elimination policy after round `t`.
#[pyfunction]
fn elimination_radius(
    sigma: f64,
    epsilon: f64,
    num_arms: usize,
    delta: f64,
    t: u64,
) -> PyResult<f64> {
    let p = RadiusParams::new(sigma, epsilon, num_arms, delta).map_err(py_err)?;
    confidence::gamma_se_radius(&p, t).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (means, uncertainty = None, sigma = 1.0))]
fn problem_complexity(means: Vec<f64>, uncertainty: Option<Vec<f64>>, sigma: f64) -> PyResult<f64> {
    let u = uncertainty.unwrap_or_else(|| vec![0.0; means.len()]);
    confidence::problem_complexity(&means, &u, sigma).map_err(py_err)
}

#[pymodule]
fn cbai(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyExperiment>()?;
    m.add_class::<PyArmStatistics>()?;
    m.add_function(wrap_pyfunction!(trimmed_mean, m)?)?;
    m.add_function(wrap_pyfunction!(median, m)?)?;
    m.add_function(wrap_pyfunction!(exploration_floor, m)?)?;
    m.add_function(wrap_pyfunction!(gap_radius, m)?)?;
    m.add_function(wrap_pyfunction!(elimination_radius, m)?)?;
    m.add_function(wrap_pyfunction!(problem_complexity, m)?)?;
    Ok(())
}

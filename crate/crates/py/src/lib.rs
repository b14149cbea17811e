//! Python bindings. Structured results come back as plain dicts.

use concentrix::dynamics::{self, Matrix, SystemSpec};
use concentrix::montecarlo::{self, DeviationConfig, GroundMetric, StationarySource};
use concentrix::transport::{self, ContractionCertificate, MetricTag, T1Certificate};
use concentrix::{lyapunov, rng, Reward};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

fn err(e: concentrix::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_dict<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<Matrix> {
    Matrix::from_rows(&rows).map_err(err)
}

/// Parses `"norm"`, or a JSON object such as `{"r": "coordinate", "index": 0}`.
fn reward(spec: &str) -> PyResult<Reward> {
    if spec == "norm" {
        return Ok(Reward::Norm);
    }
    let value: serde_json::Value = serde_json::from_str(spec).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Reward::from_json(&value).map_err(err)
}

#[pyclass(name = "System", frozen)]
struct PySystem {
    inner: SystemSpec,
}

#[pymethods]
impl PySystem {
    #[staticmethod]
    fn lds(a: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(Self {
            inner: SystemSpec::lds(matrix(a)?).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("system serializes")
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn is_lds(&self) -> bool {
        self.inner.is_lds()
    }

    fn hash(&self) -> String {
        self.inner.hash()
    }

    fn region_index(&self, x: Vec<f64>) -> PyResult<usize> {
        self.inner.check_dim(&x).map_err(err)?;
        Ok(self.inner.region_index(&x))
    }

    /// States `x_0..x_n`.
    fn simulate(&self, py: Python<'_>, x0: Vec<f64>, n: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
        let spec = &self.inner;
        py.detach(|| dynamics::simulate(spec, &x0, n, seed))
            .map(|t| t.states)
            .map_err(err)
    }

    fn check_hypothesis(&self, py: Python<'_>, rho: f64, gamma: f64, lipschitz_bound: f64) -> PyResult<Py<PyAny>> {
        let report = dynamics::check_slds_hypothesis(&self.inner, rho, gamma, lipschitz_bound).map_err(err)?;
        to_dict(py, &report)
    }

    fn __repr__(&self) -> String {
        format!("System({})", self.to_json())
    }
}

#[pyclass(name = "ConcentrationCertificate", frozen)]
struct PyCertificate {
    inner: transport::ConcentrationCertificate,
}

#[pymethods]
impl PyCertificate {
    #[staticmethod]
    #[pyo3(signature = (c, lambda_hat, n, lipschitz=1.0, bias=0.0))]
    fn markov(c: f64, lambda_hat: f64, n: usize, lipschitz: f64, bias: f64) -> PyResult<Self> {
        let t1 = T1Certificate::new(c, MetricTag::Euclidean).map_err(err)?;
        let k = ContractionCertificate::new(lambda_hat).map_err(err)?;
        Ok(Self {
            inner: transport::ConcentrationCertificate::markov(t1, k, n, lipschitz, bias).map_err(err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (c, n, lipschitz=1.0))]
    fn iid(c: f64, n: usize, lipschitz: f64) -> PyResult<Self> {
        Ok(Self {
            inner: transport::ConcentrationCertificate::iid(c, n, lipschitz).map_err(err)?,
        })
    }

    /// Markov certificate of an LDS at horizon `n`.
    #[staticmethod]
    #[pyo3(signature = (system, n, lipschitz=1.0))]
    fn for_lds(system: &PySystem, n: usize, lipschitz: f64) -> PyResult<Self> {
        let [a] = system.inner.matrices() else {
            return Err(PyValueError::new_err("expected an lds"));
        };
        let (t1, k) = transport::lds_certificate(a).map_err(err)?;
        Self::markov(t1.c, k.lambda_hat, n, lipschitz, 0.0)
    }

    #[getter]
    fn c(&self) -> f64 {
        self.inner.c
    }

    #[getter]
    fn lambda_hat(&self) -> f64 {
        self.inner.lambda_hat
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    fn tail_bound(&self, epsilon: f64) -> f64 {
        self.inner.tail_bound(epsilon)
    }

    fn tensorized_constant(&self) -> f64 {
        self.inner.tensorized_constant()
    }

    fn to_dict(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_dict(py, &self.inner)
    }
}

#[pyfunction]
fn spectral_norm(a: Vec<Vec<f64>>) -> PyResult<f64> {
    dynamics::spectral_norm(&matrix(a)?).map_err(err)
}

#[pyfunction]
fn gaussian_w2(m1: Vec<f64>, s1: Vec<Vec<f64>>, m2: Vec<f64>, s2: Vec<Vec<f64>>) -> PyResult<f64> {
    transport::gaussian_w2(&m1, &matrix(s1)?, &m2, &matrix(s2)?).map_err(err)
}

#[pyfunction]
fn correlation_bound(c: f64, lambda_hat: f64, lipschitz: f64, lag: usize) -> PyResult<f64> {
    transport::correlation_bound(c, lambda_hat, lipschitz, lag).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (samples, c, lipschitz=1.0))]
fn bobkov_goetze_gap(py: Python<'_>, samples: Vec<f64>, c: f64, lipschitz: f64) -> PyResult<Py<PyAny>> {
    let grid = transport::default_lambda_grid(c, lipschitz);
    let report = transport::bobkov_goetze_gap(&samples, c, lipschitz, &grid).map_err(err)?;
    to_dict(py, &report)
}

#[pyfunction]
fn stein_mgf(a: Vec<Vec<f64>>, x: Vec<f64>, alpha: f64) -> PyResult<f64> {
    lyapunov::stein_mgf(&matrix(a)?, &x, alpha).map_err(err)
}

/// Full SLDS certificate chain as a dict.
#[pyfunction]
fn certify_slds(
    py: Python<'_>,
    system: &PySystem,
    rho: f64,
    gamma: f64,
    lipschitz_bound: f64,
    alpha_hat: f64,
) -> PyResult<Py<PyAny>> {
    let chain = lyapunov::certify_slds(&system.inner, rho, gamma, lipschitz_bound, alpha_hat).map_err(err)?;
    to_dict(py, &chain)
}

#[pyfunction]
fn stationary_covariance(a: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    Ok(montecarlo::lds_stationary_covariance(&matrix(a)?).map_err(err)?.to_rows())
}

#[pyfunction]
fn empirical_w1(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>) -> PyResult<f64> {
    montecarlo::empirical_w1(&a, &b, &GroundMetric::Euclidean)
        .map(|w| w.value)
        .map_err(err)
}

/// Single-trajectory deviation experiment on an LDS; returns the report dict.
#[pyfunction]
#[pyo3(signature = (system, x0, n, replications, epsilons, seed, reward_spec="norm", target_mean=None))]
#[allow(clippy::too_many_arguments)]
fn deviation_experiment(
    py: Python<'_>,
    system: &PySystem,
    x0: Vec<f64>,
    n: usize,
    replications: usize,
    epsilons: Vec<f64>,
    seed: u64,
    reward_spec: &str,
    target_mean: Option<f64>,
) -> PyResult<Py<PyAny>> {
    let spec = &system.inner;
    let reward = reward(reward_spec)?;
    let [a] = spec.matrices() else {
        return Err(PyValueError::new_err("expected an lds"));
    };
    let target = match target_mean {
        Some(v) => montecarlo::MeanEstimate::supplied(v, "supplied from Python").map_err(err)?,
        None => montecarlo::stationary_mean_reward(StationarySource::Lds(a), &reward, 1e-2, rng::mix64(seed))
            .map_err(err)?,
    };
    let cfg = DeviationConfig {
        reward,
        x0,
        n,
        epsilons,
        replications,
        seed,
        target,
        bias_samples: DeviationConfig::default_bias_samples(spec.dim()),
    };
    let report = py
        .detach(|| montecarlo::deviation_probability_experiment(spec, &cfg))
        .map_err(err)?;
    to_dict(py, &report)
}

#[pyfunction]
fn derive_seed(master: u64, index: u64) -> u64 {
    rng::derive_seed(master, index)
}

#[pymodule]
fn concentrix_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", concentrix::CODE_VERSION)?;
    m.add_class::<PySystem>()?;
    m.add_class::<PyCertificate>()?;
    m.add_function(wrap_pyfunction!(spectral_norm, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_w2, m)?)?;
    m.add_function(wrap_pyfunction!(correlation_bound, m)?)?;
    m.add_function(wrap_pyfunction!(bobkov_goetze_gap, m)?)?;
    m.add_function(wrap_pyfunction!(stein_mgf, m)?)?;
    m.add_function(wrap_pyfunction!(certify_slds, m)?)?;
    m.add_function(wrap_pyfunction!(stationary_covariance, m)?)?;
    m.add_function(wrap_pyfunction!(empirical_w1, m)?)?;
    m.add_function(wrap_pyfunction!(deviation_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(derive_seed, m)?)?;
    Ok(())
}

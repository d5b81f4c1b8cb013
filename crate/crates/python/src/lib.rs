//! Python bindings: likelihood models, update rules, theorem constants and
//! JSON-configured experiments.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use social_learning::bounds::{self, TheoremTag};
use social_learning::graph::{self, Graph, Matrix};
use social_learning::hypothesis::{self, DistributionVector};
use social_learning::io::{self, Experiment as CoreExperiment};
use social_learning::rules::{self, BeliefMatrix};
use social_learning::sim;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn json_to_py<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(runtime_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn tag(name: &str) -> PyResult<TheoremTag> {
    serde_json::from_value(serde_json::Value::String(name.to_string()))
        .map_err(|_| PyValueError::new_err(format!("unknown theorem tag `{name}`")))
}

fn beliefs(rows: Vec<Vec<f64>>) -> PyResult<BeliefMatrix> {
    BeliefMatrix::from_probabilities(rows).map_err(value_err)
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<Matrix> {
    Matrix::from_rows(rows).map_err(value_err)
}

/// Per-agent likelihood tables `likelihoods[i][θ][s]` and true signal
/// distributions `truth[i][s]`.
#[pyclass(name = "LikelihoodModel", frozen)]
struct LikelihoodModel {
    inner: hypothesis::LikelihoodModel,
}

#[pymethods]
impl LikelihoodModel {
    #[new]
    fn new(likelihoods: Vec<Vec<Vec<f64>>>, truth: Vec<Vec<f64>>) -> PyResult<Self> {
        let inner = hypothesis::LikelihoodModel::from_tables(likelihoods, truth).map_err(value_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn agents(&self) -> usize {
        self.inner.agents()
    }

    #[getter]
    fn hypotheses(&self) -> usize {
        self.inner.hypotheses()
    }

    fn alpha(&self) -> f64 {
        self.inner.alpha()
    }

    fn objective_values(&self) -> Vec<f64> {
        hypothesis::objective_values(&self.inner)
    }

    #[pyo3(signature = (tolerance = hypothesis::DEFAULT_OPTIMAL_TOLERANCE))]
    fn optimal_set(&self, tolerance: f64) -> Vec<usize> {
        hypothesis::optimal_set(&self.inner, tolerance)
    }

    /// Diagnostic report as a dict with `violations` and `alpha`.
    fn validate<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_to_py(py, &hypothesis::validate_model(&self.inner))
    }

    fn gamma2(&self) -> PyResult<f64> {
        bounds::gamma2(&self.inner).map_err(value_err)
    }

    #[pyo3(signature = (initial, agent, lam, alpha, quantified = None))]
    fn gamma1(
        &self,
        initial: Vec<Vec<f64>>,
        agent: usize,
        lam: f64,
        alpha: f64,
        quantified: Option<Vec<usize>>,
    ) -> PyResult<f64> {
        bounds::gamma1_i(
            &self.inner,
            &beliefs(initial)?,
            agent,
            lam,
            alpha,
            quantified.as_deref(),
        )
        .map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "LikelihoodModel(agents={}, hypotheses={})",
            self.inner.agents(),
            self.inner.hypotheses()
        )
    }
}

#[pyfunction]
fn kl_divergence(p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    let p = DistributionVector::new(p).map_err(value_err)?;
    let q = DistributionVector::new(q).map_err(value_err)?;
    hypothesis::kl_divergence(&p, &q).map_err(value_err)
}

fn graph_from(n: usize, edges: Vec<(usize, usize)>, directed: bool) -> PyResult<Graph> {
    if directed {
        Graph::directed(n, edges)
    } else {
        Graph::undirected(n, edges)
    }
    .map_err(value_err)
}

#[pyfunction]
fn metropolis_weights(n: usize, edges: Vec<(usize, usize)>) -> PyResult<Vec<Vec<f64>>> {
    Ok(graph::metropolis_weights(&graph_from(n, edges, false)?)
        .map_err(value_err)?
        .to_rows())
}

#[pyfunction]
fn lazy_metropolis_weights(n: usize, edges: Vec<(usize, usize)>) -> PyResult<Vec<Vec<f64>>> {
    Ok(graph::lazy_metropolis_weights(&graph_from(n, edges, false)?)
        .map_err(value_err)?
        .to_rows())
}

#[pyfunction]
fn second_eigenvalue_modulus(a: Vec<Vec<f64>>) -> PyResult<f64> {
    Ok(graph::second_eigenvalue_modulus(&matrix(a)?))
}

#[pyfunction]
fn geometric_then_bayes(
    model: &LikelihoodModel,
    beliefs_rows: Vec<Vec<f64>>,
    signals: Vec<usize>,
    a: Vec<Vec<f64>>,
) -> PyResult<Vec<Vec<f64>>> {
    let out =
        rules::geometric_then_bayes(&beliefs(beliefs_rows)?, &signals, &model.inner, &matrix(a)?).map_err(value_err)?;
    Ok(out.to_probabilities())
}

#[pyfunction]
fn bayes_then_geometric(
    model: &LikelihoodModel,
    beliefs_rows: Vec<Vec<f64>>,
    signals: Vec<usize>,
    a: Vec<Vec<f64>>,
) -> PyResult<Vec<Vec<f64>>> {
    let out =
        rules::bayes_then_geometric(&beliefs(beliefs_rows)?, &signals, &model.inner, &matrix(a)?).map_err(value_err)?;
    Ok(out.to_probabilities())
}

#[pyfunction]
fn degroot_social_update(
    model: &LikelihoodModel,
    beliefs_rows: Vec<Vec<f64>>,
    signals: Vec<usize>,
    a: Vec<Vec<f64>>,
) -> PyResult<Vec<Vec<f64>>> {
    let out = rules::degroot_social_update(&beliefs(beliefs_rows)?, &signals, &model.inner, &matrix(a)?)
        .map_err(value_err)?;
    Ok(out.to_probabilities())
}

#[pyfunction]
#[pyo3(signature = (eta, n, b = 1))]
fn lambda_theorem1(eta: f64, n: usize, b: usize) -> f64 {
    bounds::lambda_theorem1(eta, n, b)
}

/// `(σ, λ)`.
#[pyfunction]
#[pyo3(signature = (u, n = None))]
fn constants_theorem2(u: usize, n: Option<usize>) -> PyResult<(f64, f64)> {
    let c = bounds::constants_theorem2(u, n).map_err(value_err)?;
    Ok((c.sigma, c.lambda))
}

/// `(C, λ, δ)`.
#[pyfunction]
fn constants_theorem3(n: usize, b: usize, regular: bool) -> PyResult<(f64, f64, f64)> {
    let c = bounds::constants_theorem3(n, b, regular).map_err(value_err)?;
    Ok((c.c, c.lambda, c.delta))
}

#[pyfunction]
#[pyo3(signature = (rule, rho, alpha, gamma2, n = 1, delta = 1.0))]
fn transient_time(rule: &str, rho: f64, alpha: f64, gamma2: f64, n: usize, delta: f64) -> PyResult<u64> {
    bounds::transient_time(tag(rule)?, rho, alpha, gamma2, n, delta).map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (rule, k, gamma2, gamma1, delta = 1.0))]
fn belief_bound(rule: &str, k: u64, gamma2: f64, gamma1: f64, delta: f64) -> PyResult<f64> {
    Ok(bounds::belief_bound(tag(rule)?, k, gamma2, gamma1, delta))
}

/// An experiment built from a JSON configuration document.
#[pyclass(name = "Experiment", frozen)]
struct Experiment {
    inner: CoreExperiment,
}

#[pymethods]
impl Experiment {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let doc = io::parse_config(text).map_err(value_err)?;
        Ok(Self {
            inner: doc.build().map_err(value_err)?,
        })
    }

    /// The configuration with every default filled in, as JSON text.
    fn resolved_config(&self) -> String {
        io::serialize_config(&self.inner.doc.resolved())
    }

    fn check_assumptions<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_to_py(py, &self.inner.check_assumptions())
    }

    /// Theorem constants for the configured rule; `None` when no theorem applies.
    fn bounds<'py>(&self, py: Python<'py>) -> PyResult<Option<Bound<'py, PyAny>>> {
        match self.inner.bounds() {
            None => Ok(None),
            Some(r) => Ok(Some(json_to_py(py, &r.map_err(value_err)?)?)),
        }
    }

    /// Runs one replicate. Returns a dict with `k` (logged steps), `beliefs`
    /// (one `n × m` list per logged step), `signals` and `seed`.
    #[pyo3(signature = (replicate = 0))]
    fn run<'py>(&self, py: Python<'py>, replicate: usize) -> PyResult<Bound<'py, PyDict>> {
        let sim_cfg = &self.inner.sim;
        let log = py
            .detach(|| sim::run_replicate(sim_cfg, replicate))
            .map_err(runtime_err)?;
        let out = PyDict::new(py);
        out.set_item("seed", log.seed)?;
        out.set_item("rule", &log.rule)?;
        out.set_item("k", log.snapshots.iter().map(|s| s.k).collect::<Vec<_>>())?;
        out.set_item(
            "beliefs",
            log.snapshots
                .iter()
                .map(|s| s.beliefs.to_probabilities())
                .collect::<Vec<_>>(),
        )?;
        out.set_item("signals", log.signals)?;
        Ok(out)
    }

    /// Monte Carlo bound validation over every replicate.
    fn montecarlo<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let report = match self.inner.bounds() {
            None => return Err(PyValueError::new_err("the configured rule has no theorem bound")),
            Some(r) => r.map_err(value_err)?,
        };
        let sim_cfg = &self.inner.sim;
        let summary = py
            .detach(|| sim::monte_carlo_validate(sim_cfg, &report))
            .map_err(runtime_err)?;
        json_to_py(py, &summary)
    }

    /// Trajectory CSV of all replicates, byte-identical to the CLI output.
    fn trajectory_csv(&self, py: Python<'_>) -> PyResult<String> {
        let sim_cfg = &self.inner.sim;
        let logs = py.detach(|| sim::run_all(sim_cfg)).map_err(runtime_err)?;
        Ok(io::trajectory_csv(&logs))
    }
}

#[pymodule]
#[pyo3(name = "social_learning")]
fn init(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<LikelihoodModel>()?;
    m.add_class::<Experiment>()?;
    m.add_function(wrap_pyfunction!(kl_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(metropolis_weights, m)?)?;
    m.add_function(wrap_pyfunction!(lazy_metropolis_weights, m)?)?;
    m.add_function(wrap_pyfunction!(second_eigenvalue_modulus, m)?)?;
    m.add_function(wrap_pyfunction!(geometric_then_bayes, m)?)?;
    m.add_function(wrap_pyfunction!(bayes_then_geometric, m)?)?;
    m.add_function(wrap_pyfunction!(degroot_social_update, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_theorem1, m)?)?;
    m.add_function(wrap_pyfunction!(constants_theorem2, m)?)?;
    m.add_function(wrap_pyfunction!(constants_theorem3, m)?)?;
    m.add_function(wrap_pyfunction!(transient_time, m)?)?;
    m.add_function(wrap_pyfunction!(belief_bound, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}

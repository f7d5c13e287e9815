//! Python bindings. Structured results (summaries, study reports, priors)
//! cross the boundary as JSON and are returned as plain dicts.

use std::collections::HashMap;

use ftrisk_core::inference::{self, summarize_samples};
use ftrisk_core::simulation::Sampler;
use ftrisk_core::{self as core, EventState, MaskPolicy, MhSettings};
use pyo3::exceptions::{PyKeyError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn json_to_py(py: Python<'_>, text: &str) -> PyResult<Py<PyAny>> {
    let json = py.import("json")?;
    Ok(json.call_method1("loads", (text,))?.unbind())
}

fn to_py(py: Python<'_>, value: &impl serde::Serialize) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    json_to_py(py, &text)
}

#[pyclass(name = "FaultTree", module = "ftrisk", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyFaultTree {
    inner: core::FaultTree,
}

#[pymethods]
impl PyFaultTree {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyFaultTree {
            inner: core::FaultTree::from_json(text).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// The four-event example tree bundled with the library.
    #[staticmethod]
    fn example() -> Self {
        PyFaultTree {
            inner: core::data::fig1_tree(),
        }
    }

    #[staticmethod]
    fn launch_vehicle() -> Self {
        PyFaultTree {
            inner: core::data::atv_tree(),
        }
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    /// Event ids in canonical order: primaries first, then gates.
    #[getter]
    fn events(&self) -> Vec<String> {
        self.inner.canonical_order().iter().map(|e| e.to_string()).collect()
    }

    #[getter]
    fn primaries(&self) -> Vec<String> {
        self.inner.primary_ids().map(|e| e.to_string()).collect()
    }

    #[getter]
    fn top(&self) -> String {
        self.inner.id(self.inner.top()).to_string()
    }

    #[getter]
    fn structure(&self) -> &'static str {
        self.inner.classify_structure().as_str()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "FaultTree(k={}, n={}, top={:?})",
            self.inner.primary_count(),
            self.inner.len(),
            self.top()
        )
    }

    /// Values of every event for one assignment of the primaries.
    fn evaluate(&self, primaries: Vec<bool>) -> PyResult<Vec<bool>> {
        if primaries.len() != self.inner.primary_count() {
            return Err(PyValueError::new_err(format!(
                "expected {} primary values",
                self.inner.primary_count()
            )));
        }
        Ok(self.inner.evaluate(&primaries))
    }

    /// Occurrence probability of every event given independent primaries.
    fn probabilities(&self, p: Vec<f64>) -> PyResult<Vec<f64>> {
        check_point(&self.inner, &p)?;
        Ok(self.inner.gate_probabilities(&p))
    }

    /// Log-likelihood of observations at `p`. Each observation maps event
    /// ids to 0/1; missing ids and None are unobserved.
    fn loglik(&self, observations: Vec<HashMap<String, Option<bool>>>, p: Vec<f64>) -> PyResult<f64> {
        check_point(&self.inner, &p)?;
        let data = observations_from(&self.inner, &observations)?;
        let lik = core::DatasetLikelihood::new(&self.inner, &data, core::LikelihoodMethod::Auto).map_err(err)?;
        Ok(core::LogLikelihood::loglik(&lik, &p))
    }
}

fn check_point(tree: &core::FaultTree, p: &[f64]) -> PyResult<()> {
    if p.len() != tree.primary_count() || !p.iter().all(|x| (0.0..=1.0).contains(x)) {
        return Err(PyValueError::new_err(format!(
            "expected {} probabilities in [0, 1]",
            tree.primary_count()
        )));
    }
    Ok(())
}

fn observations_from(
    tree: &core::FaultTree,
    rows: &[HashMap<String, Option<bool>>],
) -> PyResult<Vec<core::Observation>> {
    rows.iter()
        .map(|row| {
            let pairs: Vec<(&str, EventState)> = row
                .iter()
                .map(|(id, v)| (id.as_str(), v.map_or(EventState::Na, EventState::from_bool)))
                .collect();
            core::Observation::from_pairs(tree, &pairs).map_err(err)
        })
        .collect()
}

#[pyclass(name = "PriorSpec", module = "ftrisk", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyPriorSpec {
    inner: core::PriorSpec,
}

#[pymethods]
impl PyPriorSpec {
    /// Priors file contents: a map of event id to {"a": .., "b": ..}.
    #[staticmethod]
    fn from_json(tree: &PyFaultTree, text: &str) -> PyResult<Self> {
        Ok(PyPriorSpec {
            inner: core::PriorSpec::from_json(&tree.inner, text).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_params(tree: &PyFaultTree, params: HashMap<String, (f64, f64)>) -> PyResult<Self> {
        let map = params
            .into_iter()
            .map(|(id, (a, b))| Ok((core::EventId::new(id), core::BetaParams::new(a, b).map_err(err)?)))
            .collect::<PyResult<HashMap<_, _>>>()?;
        Ok(PyPriorSpec {
            inner: core::PriorSpec::from_map(&tree.inner, &map).map_err(err)?,
        })
    }

    #[staticmethod]
    fn uniform(tree: &PyFaultTree) -> Self {
        PyPriorSpec {
            inner: core::PriorSpec::uniform(&tree.inner),
        }
    }

    /// Published beta priors of the launch-vehicle primaries.
    #[staticmethod]
    fn launch_vehicle() -> Self {
        PyPriorSpec {
            inner: core::data::atv_published_priors(),
        }
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn ids(&self) -> Vec<String> {
        self.inner.ids().iter().map(|e| e.to_string()).collect()
    }

    #[getter]
    fn params(&self) -> Vec<(f64, f64)> {
        self.inner.params().iter().map(|b| (b.a, b.b)).collect()
    }

    fn means(&self) -> Vec<f64> {
        self.inner.means()
    }

    fn __getitem__(&self, id: &str) -> PyResult<(f64, f64)> {
        self.inner
            .get(id)
            .map(|b| (b.a, b.b))
            .ok_or_else(|| PyKeyError::new_err(id.to_owned()))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

#[pyclass(name = "Samples", module = "ftrisk", frozen)]
struct PySamples {
    inner: core::SampleSet,
}

#[pymethods]
impl PySamples {
    #[getter]
    fn ids(&self) -> Vec<String> {
        self.inner.ids().iter().map(|e| e.to_string()).collect()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn diagnostics(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.inner.diagnostics)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn column(&self, id: &str) -> PyResult<Vec<f64>> {
        self.inner
            .column_by_id(id)
            .ok_or_else(|| PyKeyError::new_err(id.to_owned()))
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        self.inner.rows().map(<[f64]>::to_vec).collect()
    }

    /// Mean, sd, central 95% interval and Monte Carlo error of every primary
    /// and of the requested gate events (the top event by default).
    #[pyo3(signature = (tree, targets = None))]
    fn summary(&self, py: Python<'_>, tree: &PyFaultTree, targets: Option<Vec<String>>) -> PyResult<Py<PyAny>> {
        let targets = targets.unwrap_or_else(|| vec![tree.top()]);
        let refs: Vec<&str> = targets.iter().map(String::as_str).collect();
        let report = summarize_samples(&tree.inner, &self.inner, &refs).map_err(err)?;
        let out = PyDict::new(py);
        for q in &report.quantities {
            out.set_item(&q.event, to_py(py, q)?)?;
        }
        Ok(out.into_any().unbind())
    }

    /// Per-draw occurrence probability of a gate event.
    fn push_forward(&self, tree: &PyFaultTree, target: &str) -> PyResult<Vec<f64>> {
        let mut out = core::push_forward(&tree.inner, &self.inner, &[target]).map_err(err)?;
        Ok(out.pop().map(|(_, v)| v).unwrap_or_default())
    }
}

/// Normalized weights of a group of comparisons, given as
/// (event, event, level) triples with levels such as "strongly_more".
#[pyfunction]
fn comparison_weights(
    events: Vec<String>,
    comparisons: Vec<(String, String, String)>,
) -> PyResult<HashMap<String, f64>> {
    let ids = events.into_iter().map(core::EventId::new).collect();
    let mut matrix = core::ComparisonMatrix::new(ids).map_err(err)?;
    for (from, to, level) in &comparisons {
        let level: core::ComparisonLevel = serde_json::from_value(serde_json::Value::String(level.clone()))
            .map_err(|_| PyValueError::new_err(format!("unknown comparison level {level:?}")))?;
        matrix.record(from, to, level).map_err(err)?;
    }
    let w = core::weights(&matrix).map_err(err)?;
    Ok(w.ids()
        .iter()
        .map(|e| e.to_string())
        .zip(w.values().iter().copied())
        .collect())
}

/// Beta priors for every primary from a comparisons document. Returns the
/// prior and the per-event detail (weight, scaled interval, parameters).
#[pyfunction]
fn elicit(py: Python<'_>, tree: &PyFaultTree, comparisons_json: &str) -> PyResult<(PyPriorSpec, Py<PyAny>)> {
    let sessions = core::parse_sessions(comparisons_json).map_err(err)?;
    let elicitation = core::build_priors(&tree.inner, &sessions).map_err(err)?;
    let spec = elicitation.prior_spec(&tree.inner).map_err(err)?;
    Ok((PyPriorSpec { inner: spec }, to_py(py, &elicitation.entries())?))
}

/// Beta parameters whose 2.5% and 97.5% quantiles are `lower` and `upper`.
#[pyfunction]
fn fit_central_interval(lower: f64, upper: f64) -> PyResult<(f64, f64)> {
    let b = core::fit_central_interval(lower, upper).map_err(err)?;
    Ok((b.a, b.b))
}

#[pyfunction]
fn beta_quantile(a: f64, b: f64, q: f64) -> PyResult<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(PyValueError::new_err("q must lie in [0, 1]"));
    }
    Ok(core::BetaParams::new(a, b).map_err(err)?.quantile(q))
}

#[pyfunction]
fn sample_prior(py: Python<'_>, spec: &PyPriorSpec, draws: usize, seed: u64) -> PyResult<PySamples> {
    let spec = spec.inner.clone();
    let inner = py.detach(move || core::sample_prior(&spec, draws, seed)).map_err(err)?;
    Ok(PySamples { inner })
}

#[pyfunction]
#[pyo3(signature = (spec, tree, observations, draws = 100_000, seed = 0))]
fn posterior_importance(
    py: Python<'_>,
    spec: &PyPriorSpec,
    tree: &PyFaultTree,
    observations: Vec<HashMap<String, Option<bool>>>,
    draws: usize,
    seed: u64,
) -> PyResult<PySamples> {
    let data = observations_from(&tree.inner, &observations)?;
    let (spec, tree) = (spec.inner.clone(), tree.inner.clone());
    let inner = py
        .detach(move || core::posterior_importance(&spec, &tree, &data, draws, seed))
        .map_err(err)?;
    Ok(PySamples { inner })
}

fn mh_settings(iterations: usize, step_variance: f64, burnin: Option<usize>, thin: Option<usize>) -> MhSettings {
    MhSettings {
        step_variance,
        burnin,
        thin,
        ..MhSettings::with_iterations(iterations)
    }
}

#[pyfunction]
#[pyo3(signature = (spec, tree, observations, iterations = inference::DEFAULT_ITERATIONS, step_variance = inference::DEFAULT_STEP_VARIANCE, burnin = None, thin = None, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn posterior_mh(
    py: Python<'_>,
    spec: &PyPriorSpec,
    tree: &PyFaultTree,
    observations: Vec<HashMap<String, Option<bool>>>,
    iterations: usize,
    step_variance: f64,
    burnin: Option<usize>,
    thin: Option<usize>,
    seed: u64,
) -> PyResult<PySamples> {
    let data = observations_from(&tree.inner, &observations)?;
    let settings = mh_settings(iterations, step_variance, burnin, thin);
    let (spec, tree) = (spec.inner.clone(), tree.inner.clone());
    let inner = py
        .detach(move || core::posterior_mh(&spec, &tree, &data, &settings, seed))
        .map_err(err)?;
    Ok(PySamples { inner })
}

/// Repeated simulate-mask-update study. `policies` are names such as
/// "complete", "top-only", "top-and-intermediate" or "random:0.5".
/// Returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (tree, truth, prior, m, policies, replicates = 20, method = "mh", iterations = inference::DEFAULT_ITERATIONS, draws = 100_000, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn run_study(
    py: Python<'_>,
    tree: &PyFaultTree,
    truth: Vec<f64>,
    prior: &PyPriorSpec,
    m: usize,
    policies: Vec<String>,
    replicates: usize,
    method: &str,
    iterations: usize,
    draws: usize,
    seed: u64,
) -> PyResult<Py<PyAny>> {
    let policies = policies
        .iter()
        .map(|p| MaskPolicy::parse(p))
        .collect::<core::Result<Vec<_>>>()
        .map_err(err)?;
    let sampler = match method {
        "mh" => Sampler::Metropolis(MhSettings::with_iterations(iterations)),
        "is" => Sampler::Importance { draws },
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown method {other:?}, expected \"mh\" or \"is\""
            )))
        }
    };
    let config = core::StudyConfig {
        tree: tree.inner.clone(),
        truth,
        prior: prior.inner.clone(),
        m,
        policies,
        replicates,
        sampler,
        seed,
    };
    let report = py.detach(move || core::run_study(&config)).map_err(err)?;
    to_py(py, &report)
}

#[pymodule]
fn ftrisk(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFaultTree>()?;
    m.add_class::<PyPriorSpec>()?;
    m.add_class::<PySamples>()?;
    m.add_function(wrap_pyfunction!(comparison_weights, m)?)?;
    m.add_function(wrap_pyfunction!(elicit, m)?)?;
    m.add_function(wrap_pyfunction!(fit_central_interval, m)?)?;
    m.add_function(wrap_pyfunction!(beta_quantile, m)?)?;
    m.add_function(wrap_pyfunction!(sample_prior, m)?)?;
    m.add_function(wrap_pyfunction!(posterior_importance, m)?)?;
    m.add_function(wrap_pyfunction!(posterior_mh, m)?)?;
    m.add_function(wrap_pyfunction!(run_study, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}

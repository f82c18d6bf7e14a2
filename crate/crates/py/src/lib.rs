//! Python bindings. Build with `maturin develop --features extension-module`
//! and `import claimpred`.

use std::fmt::Display;

use claimpred_core::conformal::{self, builtin_measure_abs_deviation, LabeledPoint};
use claimpred_core::distributions::GammaParams;
use claimpred_core::intervals::{self, Branch, IntervalError, MeanResidual};
use claimpred_core::order_stats::{self, OrderStatError, Sample};
use claimpred_core::simulation::{self, ExperimentConfig, SimError};
use claimpred_core::{PredictionInterval, RegressionSample, TransformExpr};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

create_exception!(
    claimpred,
    InfeasibleError,
    PyValueError,
    "No valid interval exists at this alpha and sample size."
);

fn value_err(e: impl Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn order_err(e: OrderStatError) -> PyErr {
    match e {
        OrderStatError::Infeasible { .. } => InfeasibleError::new_err(e.to_string()),
        other => value_err(other),
    }
}

fn interval_err(e: IntervalError) -> PyErr {
    match e {
        IntervalError::OrderStat(inner) => order_err(inner),
        other => value_err(other),
    }
}

fn sim_err(e: SimError) -> PyErr {
    if e.is_infeasible() {
        InfeasibleError::new_err(e.to_string())
    } else {
        value_err(e)
    }
}

/// A parsed transformation `h(t1, ..., tp)`.
#[pyclass(name = "Transform", module = "claimpred", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyTransform {
    inner: TransformExpr,
}

#[pymethods]
impl PyTransform {
    #[new]
    fn new(source: &str, arity: usize) -> PyResult<Self> {
        TransformExpr::parse(source, arity)
            .map(|inner| Self { inner })
            .map_err(value_err)
    }

    #[staticmethod]
    fn zero(arity: usize) -> Self {
        Self {
            inner: TransformExpr::zero(arity),
        }
    }

    #[getter]
    fn arity(&self) -> usize {
        self.inner.arity()
    }

    fn evaluate(&self, point: Vec<f64>) -> PyResult<f64> {
        self.inner.evaluate(&point).map_err(value_err)
    }

    fn __call__(&self, point: Vec<f64>) -> PyResult<f64> {
        self.evaluate(point)
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Transform('{}', {})", self.inner, self.inner.arity())
    }
}

#[pyclass(name = "Interval", module = "claimpred", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyInterval {
    inner: PredictionInterval,
}

#[pymethods]
impl PyInterval {
    #[getter]
    fn lower(&self) -> f64 {
        self.inner.lower
    }

    #[getter]
    fn upper(&self) -> f64 {
        self.inner.upper
    }

    #[getter]
    fn lower_open(&self) -> bool {
        self.inner.lower_open
    }

    #[getter]
    fn upper_open(&self) -> bool {
        self.inner.upper_open
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    #[getter]
    fn length(&self) -> f64 {
        self.inner.length()
    }

    fn contains(&self, y: f64) -> bool {
        self.inner.contains(y)
    }

    fn __contains__(&self, y: f64) -> bool {
        self.inner.contains(y)
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Interval({})", self.inner)
    }
}

/// Result of [`constrained_interval`]: `[0, upper]` plus how it was formed.
#[pyclass(name = "ConstrainedInterval", module = "claimpred", frozen)]
struct PyConstrained {
    #[pyo3(get)]
    interval: PyInterval,
    #[pyo3(get)]
    upper: f64,
    /// "positive" or "fallback"
    #[pyo3(get)]
    branch: &'static str,
    #[pyo3(get)]
    degenerate: bool,
    #[pyo3(get)]
    rank: usize,
}

#[pymethods]
impl PyConstrained {
    fn __repr__(&self) -> String {
        format!(
            "ConstrainedInterval({}, branch='{}', rank={})",
            self.interval.inner, self.branch, self.rank
        )
    }
}

/// Accepts a `Transform` or an expression string over `t1..tp`.
fn as_transform(h: &Bound<'_, PyAny>, arity: usize) -> PyResult<TransformExpr> {
    if let Ok(t) = h.cast::<PyTransform>() {
        return Ok(t.get().inner.clone());
    }
    let src: String = h.extract()?;
    TransformExpr::parse(&src, arity).map_err(value_err)
}

fn sample(features: Vec<Vec<f64>>, responses: Vec<f64>) -> PyResult<RegressionSample> {
    RegressionSample::new(features, responses).map_err(interval_err)
}

#[pyfunction]
fn upper_rank(n: usize, alpha: f64) -> PyResult<usize> {
    order_stats::upper_rank(n, alpha).map_err(order_err)
}

#[pyfunction]
fn two_sided_ranks(n: usize, alpha: f64) -> PyResult<(usize, usize)> {
    order_stats::two_sided_ranks(n, alpha)
        .map(|r| (r.l, r.r))
        .map_err(order_err)
}

#[pyfunction]
fn empirical_quantile(values: Vec<f64>, p: f64) -> PyResult<f64> {
    let s = Sample::new(values).map_err(order_err)?;
    order_stats::empirical_quantile(&s, p).map_err(order_err)
}

#[pyfunction]
fn unsupervised_claim_interval(responses: Vec<f64>, alpha: f64) -> PyResult<PyInterval> {
    intervals::unsupervised_claim_interval(&responses, alpha)
        .map(|inner| PyInterval { inner })
        .map_err(interval_err)
}

#[pyfunction]
fn residualize(features: Vec<Vec<f64>>, responses: Vec<f64>, h: &Bound<'_, PyAny>) -> PyResult<Vec<f64>> {
    let s = sample(features, responses)?;
    let h = as_transform(h, s.num_predictors())?;
    intervals::residualize(&s, &h).map(|w| w.w_values).map_err(interval_err)
}

#[pyfunction]
fn constrained_interval(
    features: Vec<Vec<f64>>,
    responses: Vec<f64>,
    h: &Bound<'_, PyAny>,
    x_new: Vec<f64>,
    alpha: f64,
) -> PyResult<PyConstrained> {
    let s = sample(features, responses)?;
    let h = as_transform(h, s.num_predictors())?;
    let ci = intervals::constrained_interval(&s, &h, &x_new, alpha).map_err(interval_err)?;
    Ok(PyConstrained {
        interval: PyInterval { inner: ci.interval },
        upper: ci.upper(),
        branch: match ci.branch {
            Branch::Positive => "positive",
            Branch::Fallback => "fallback",
        },
        degenerate: ci.degenerate,
        rank: ci.rank,
    })
}

#[pyfunction]
fn general_interval(
    features: Vec<Vec<f64>>,
    responses: Vec<f64>,
    h: &Bound<'_, PyAny>,
    x_new: Vec<f64>,
    alpha: f64,
) -> PyResult<PyInterval> {
    let s = sample(features, responses)?;
    let h = as_transform(h, s.num_predictors())?;
    intervals::general_interval(&s, &h, &x_new, alpha)
        .map(|inner| PyInterval { inner })
        .map_err(interval_err)
}

/// `h(x_new)` plus the mean transformed residual.
#[pyfunction]
fn point_predict(features: Vec<Vec<f64>>, responses: Vec<f64>, h: &Bound<'_, PyAny>, x_new: Vec<f64>) -> PyResult<f64> {
    let s = sample(features, responses)?;
    let h = as_transform(h, s.num_predictors())?;
    intervals::point_predict_with(&s, &h, &MeanResidual, &x_new).map_err(interval_err)
}

#[pyfunction]
fn validity_threshold(n: usize, alpha: f64) -> PyResult<f64> {
    conformal::validity_threshold(n, alpha).map_err(value_err)
}

/// Conformal plausibility of `(x_new, y_candidate)` under the
/// absolute-deviation measure. Returns a dict.
#[pyfunction]
#[pyo3(signature = (features, responses, x_new, y_candidate, alpha = 0.1))]
fn plausibility<'py>(
    py: Python<'py>,
    features: Vec<Vec<f64>>,
    responses: Vec<f64>,
    x_new: Vec<f64>,
    y_candidate: f64,
    alpha: f64,
) -> PyResult<Bound<'py, PyAny>> {
    if features.len() != responses.len() {
        return Err(PyValueError::new_err(format!(
            "{} feature rows but {} responses",
            features.len(),
            responses.len()
        )));
    }
    let data: Vec<LabeledPoint> = features
        .into_iter()
        .zip(responses)
        .map(|(x, y)| LabeledPoint::new(x, y))
        .collect();
    let r = conformal::plausibility(&data, &x_new, y_candidate, alpha, &builtin_measure_abs_deviation())
        .map_err(value_err)?;
    let rejected = r.rejected();
    let d = to_python(py, &r)?;
    d.set_item("rejected", rejected)?;
    Ok(d)
}

#[pyfunction]
fn gamma_quantile(shape: f64, rate: f64, p: f64) -> PyResult<f64> {
    let g = GammaParams::new(shape, rate).map_err(value_err)?;
    g.quantile(p).map_err(value_err)
}

#[pyfunction]
fn gamma_cdf(shape: f64, rate: f64, x: f64) -> PyResult<f64> {
    Ok(GammaParams::new(shape, rate).map_err(value_err)?.cdf(x))
}

fn to_python<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(value_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Runs an experiment described by a JSON config; returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (config_json, workers = None))]
fn run_experiment<'py>(py: Python<'py>, config_json: &str, workers: Option<usize>) -> PyResult<Bound<'py, PyAny>> {
    let config = ExperimentConfig::from_json(config_json).map_err(sim_err)?;
    let report = py
        .detach(|| simulation::run_experiment_with_workers(&config, workers))
        .map_err(sim_err)?;
    to_python(py, &report)
}

/// Runs built-in example 1, 2 or 3 with optional overrides.
#[pyfunction]
#[pyo3(signature = (id, reps = None, seed = None, workers = None))]
fn run_example<'py>(
    py: Python<'py>,
    id: u8,
    reps: Option<usize>,
    seed: Option<u64>,
    workers: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let mut config = simulation::builtin_example(id).map_err(sim_err)?;
    if let Some(reps) = reps {
        config.reps = reps;
    }
    if let Some(seed) = seed {
        config.master_seed = seed;
    }
    let report = py
        .detach(|| simulation::run_experiment_with_workers(&config, workers))
        .map_err(sim_err)?;
    to_python(py, &report)
}

/// JSON text of built-in example `id`, a starting point for custom configs.
#[pyfunction]
fn example_config(id: u8) -> PyResult<String> {
    simulation::builtin_example(id).map(|c| c.to_json()).map_err(sim_err)
}

#[pymodule]
fn claimpred(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("InfeasibleError", m.py().get_type::<InfeasibleError>())?;
    m.add_class::<PyTransform>()?;
    m.add_class::<PyInterval>()?;
    m.add_class::<PyConstrained>()?;
    m.add_function(wrap_pyfunction!(upper_rank, m)?)?;
    m.add_function(wrap_pyfunction!(two_sided_ranks, m)?)?;
    m.add_function(wrap_pyfunction!(empirical_quantile, m)?)?;
    m.add_function(wrap_pyfunction!(unsupervised_claim_interval, m)?)?;
    m.add_function(wrap_pyfunction!(residualize, m)?)?;
    m.add_function(wrap_pyfunction!(constrained_interval, m)?)?;
    m.add_function(wrap_pyfunction!(general_interval, m)?)?;
    m.add_function(wrap_pyfunction!(point_predict, m)?)?;
    m.add_function(wrap_pyfunction!(validity_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(plausibility, m)?)?;
    m.add_function(wrap_pyfunction!(gamma_quantile, m)?)?;
    m.add_function(wrap_pyfunction!(gamma_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(run_example, m)?)?;
    m.add_function(wrap_pyfunction!(example_config, m)?)?;
    Ok(())
}

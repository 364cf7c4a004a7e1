//! Python bindings: the domain types and the main simulation entry points.
//!
//! Build with `cargo build --release -p condensate-py`, then import the
//! produced cdylib as `condensate_py` (see `python/smoke_test.py`).

use condensate::analysis;
use condensate::model;
use condensate::montecarlo;
use condensate::report;
use condensate::rng::run_stream;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn value_error(err: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(err.to_string())
}

fn parse_engine(engine: &str) -> PyResult<montecarlo::Engine> {
    engine.parse().map_err(value_error)
}

/// One condensate's initial number distribution.
#[pyclass(frozen, from_py_object, name = "CondensateSpec")]
#[derive(Clone)]
struct PySpec {
    inner: model::CondensateSpec,
}

#[pymethods]
impl PySpec {
    #[staticmethod]
    fn fock(atoms: u64) -> PySpec {
        PySpec {
            inner: model::CondensateSpec::fock(atoms),
        }
    }

    #[staticmethod]
    fn poisson(mean: f64) -> PyResult<PySpec> {
        Ok(PySpec {
            inner: model::CondensateSpec::poisson(mean).map_err(value_error)?,
        })
    }

    #[staticmethod]
    fn thermal(mean: f64) -> PyResult<PySpec> {
        Ok(PySpec {
            inner: model::CondensateSpec::thermal(mean).map_err(value_error)?,
        })
    }

    #[staticmethod]
    fn gaussian(mean: f64, variance: f64) -> PyResult<PySpec> {
        Ok(PySpec {
            inner: model::CondensateSpec::gaussian(mean, variance).map_err(value_error)?,
        })
    }

    #[getter]
    fn kind(&self) -> String {
        self.inner.kind().to_string()
    }

    #[getter]
    fn mean(&self) -> f64 {
        self.inner.mean()
    }

    /// `<n(n-1)...(n-order)>` of the distribution.
    fn falling_factorial_moment(&self, order: i64) -> PyResult<f64> {
        if order < 0 {
            return Err(PyValueError::new_err("order must be nonnegative"));
        }
        Ok(self.inner.falling_factorial_moment(order as usize))
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

/// Full experiment configuration.
#[pyclass(from_py_object, name = "ExperimentConfig")]
#[derive(Clone)]
struct PyConfig {
    inner: model::ExperimentConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (condensate_1, condensate_2, gamma_ratio=1.0, detections=500,
                        grid_points=1024, histogram_bins=25, runs=1000, seed=1))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        condensate_1: PySpec,
        condensate_2: PySpec,
        gamma_ratio: f64,
        detections: usize,
        grid_points: usize,
        histogram_bins: usize,
        runs: usize,
        seed: u64,
    ) -> PyResult<PyConfig> {
        let inner = model::ExperimentConfig {
            condensate_1: condensate_1.inner,
            condensate_2: condensate_2.inner,
            gamma_ratio,
            detections,
            grid_points,
            histogram_bins,
            runs,
            seed,
        };
        inner.validate().map_err(value_error)?;
        Ok(PyConfig { inner })
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

/// One simulated run.
#[pyclass(frozen, name = "RunResult")]
struct PyRun {
    #[pyo3(get)]
    phases: Vec<f64>,
    /// Conditional visibility after each detection count (length m+1).
    #[pyo3(get)]
    per_step_visibility: Vec<f64>,
    #[pyo3(get)]
    variance_trace: Vec<f64>,
    #[pyo3(get)]
    fitted_visibility: f64,
    #[pyo3(get)]
    fitted_phase: f64,
}

/// Aggregated ensemble statistics.
#[pyclass(frozen, name = "EnsembleResult")]
struct PyEnsemble {
    #[pyo3(get)]
    per_step_mean: Vec<f64>,
    #[pyo3(get)]
    per_step_lower_quartile: Vec<f64>,
    #[pyo3(get)]
    per_step_upper_quartile: Vec<f64>,
    #[pyo3(get)]
    mean_fitted_visibility: f64,
    #[pyo3(get)]
    variance_estimate_trace: Vec<f64>,
}

/// Conditional visibility after a single detection.
#[pyfunction]
fn visibility_one_detection(spec1: &PySpec, spec2: &PySpec, gamma: f64) -> PyResult<f64> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(PyValueError::new_err("gamma must be positive"));
    }
    Ok(model::visibility_one_detection(
        &spec1.inner,
        &spec2.inner,
        gamma,
    ))
}

/// Visibility across a net counting-rate ratio grid; returns (ratio, V) pairs.
#[pyfunction]
fn visibility_curve(spec1: &PySpec, spec2: &PySpec, ratios: Vec<f64>) -> PyResult<Vec<(f64, f64)>> {
    let curve =
        model::visibility_curve(&spec1.inner, &spec2.inner, &ratios).map_err(value_error)?;
    Ok(curve.into_iter().map(|p| (p.ratio, p.visibility)).collect())
}

/// Filter contrast `2 sqrt(Γ n̄₁ n̄₂) / (n̄₁ + Γ n̄₂)`.
#[pyfunction]
fn lambda_visibility(n1_bar: f64, n2_bar: f64, gamma: f64) -> PyResult<f64> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(PyValueError::new_err("gamma must be positive"));
    }
    Ok(condensate::filter::lambda_visibility(n1_bar, n2_bar, gamma))
}

/// Simulates one detection run with the stream `(config.seed, run_index)`.
#[pyfunction]
#[pyo3(signature = (config, engine="pi-exact", run_index=0))]
fn run_single(config: &PyConfig, engine: &str, run_index: u64) -> PyResult<PyRun> {
    let engine = parse_engine(engine)?;
    let mut rng = run_stream(config.inner.seed, run_index);
    let summary = montecarlo::run_single(&config.inner, engine, &mut rng).map_err(value_error)?;
    Ok(PyRun {
        phases: summary.trace.phases,
        per_step_visibility: summary.trace.per_step_visibility,
        variance_trace: summary.variance_trace,
        fitted_visibility: summary.fitted_visibility,
        fitted_phase: summary.fitted_phase,
    })
}

/// Runs a full ensemble and aggregates per-step statistics.
#[pyfunction]
#[pyo3(signature = (config, engine="pi-exact"))]
fn run_ensemble(config: &PyConfig, engine: &str) -> PyResult<PyEnsemble> {
    let engine = parse_engine(engine)?;
    let summary = montecarlo::run_ensemble(&config.inner, engine).map_err(value_error)?;
    Ok(PyEnsemble {
        per_step_mean: summary.per_step_mean,
        per_step_lower_quartile: summary.per_step_lower_quartile,
        per_step_upper_quartile: summary.per_step_upper_quartile,
        mean_fitted_visibility: summary.mean_fitted_visibility,
        variance_estimate_trace: summary.variance_estimate_trace,
    })
}

/// Least-squares cosine fit of binned phases; returns (contrast, peak).
#[pyfunction]
#[pyo3(signature = (phases, bins=25))]
fn fit_fringe(phases: Vec<f64>, bins: usize) -> PyResult<(f64, f64)> {
    let hist = analysis::FringeHistogram::from_phases(&phases, bins).map_err(value_error)?;
    let fit = analysis::fit_fringe(&hist);
    Ok((fit.amplitude, fit.peak_phase))
}

/// Cross-engine validation suite; returns (name, deviation, tolerance,
/// passed) tuples.
#[pyfunction]
#[pyo3(signature = (seed=1))]
fn validation_suite(seed: u64) -> Vec<(String, f64, f64, bool)> {
    report::run_validation_suite(seed)
        .checks
        .into_iter()
        .map(|c| (c.name, c.max_deviation, c.tolerance, c.passed))
        .collect()
}

#[pymodule]
fn condensate_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySpec>()?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PyRun>()?;
    m.add_class::<PyEnsemble>()?;
    m.add_function(wrap_pyfunction!(visibility_one_detection, m)?)?;
    m.add_function(wrap_pyfunction!(visibility_curve, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_visibility, m)?)?;
    m.add_function(wrap_pyfunction!(run_single, m)?)?;
    m.add_function(wrap_pyfunction!(run_ensemble, m)?)?;
    m.add_function(wrap_pyfunction!(fit_fringe, m)?)?;
    m.add_function(wrap_pyfunction!(validation_suite, m)?)?;
    Ok(())
}

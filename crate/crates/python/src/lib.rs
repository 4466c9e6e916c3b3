//! Python bindings: the closed-form prox solvers, the gap filter, a
//! certificate run on a bilinear ball problem, and the configurable solve
//! driver behind the `comp-prox` CLI.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict};

use comp_prox::comp_mp::{run, BilinearBall, Checkpoints, NoObserver, RunConfig, SaddleOperator, StepMode};
use comp_prox::harness::{run_solve, InstanceConfig, SolveSummary};
use comp_prox::linalg::DenseMatrix;
use comp_prox::prox_core::{self, AggregatedSetup};
use comp_prox::semisep::{self, Filter};
use comp_prox::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Input(_) | Error::Parse(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Rows of equal length into a row-major buffer.
fn flatten(rows: &[Vec<f64>]) -> PyResult<(Vec<f64>, usize, usize)> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(PyValueError::new_err("matrix rows must have equal length"));
    }
    Ok((rows.concat(), rows.len(), cols))
}

#[pyfunction]
fn soft_threshold(a: Vec<f64>, beta: f64) -> Vec<f64> {
    prox_core::soft_threshold(&a, beta)
}

/// Minimizer of `½‖X − A‖_F² + β‖X‖_nuc`, as a list of rows.
#[pyfunction]
fn singular_value_threshold(a: Vec<Vec<f64>>, beta: f64) -> PyResult<Vec<Vec<f64>>> {
    let (data, rows, cols) = flatten(&a)?;
    let x = prox_core::singular_value_threshold(&data, rows, cols, beta).map_err(py_err)?;
    Ok(x.chunks(cols.max(1)).map(<[f64]>::to_vec).collect())
}

#[pyfunction]
fn ball_l2_l1_prox(a: Vec<f64>, beta: f64, radius: f64) -> Vec<f64> {
    prox_core::ball_l2_l1_prox(&a, beta, radius)
}

#[pyfunction]
fn capped_simplex_project(b: Vec<f64>, r: f64) -> Vec<f64> {
    prox_core::capped_simplex_project(&b, r)
}

/// Filter of (objective, constraint) pairs with attached points.
#[pyclass(name = "Filter")]
struct PyFilter(Filter);

#[pymethods]
impl PyFilter {
    #[new]
    fn new(opt_lb: f64) -> Self {
        Self(Filter::new(opt_lb))
    }

    #[getter]
    fn opt_lb(&self) -> f64 {
        self.0.opt_lb
    }

    /// Returns whether the pair was kept (not dominated).
    #[pyo3(signature = (p, q, y = Vec::new()))]
    fn insert(&mut self, p: f64, q: f64, y: Vec<f64>) -> bool {
        self.0.insert(p, q, vec![y])
    }

    fn raise_lower_bound(&mut self, l: f64) -> bool {
        self.0.raise_lower_bound(l)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn pairs(&self) -> Vec<(f64, f64)> {
        self.0.entries().iter().map(|e| (e.p, e.q)).collect()
    }

    fn h(&self, alpha: f64) -> PyResult<f64> {
        semisep::h_eval(&self.0, alpha).map_err(py_err)
    }

    /// `(gap, alpha, [(entry, weight)], combined point)`
    fn gap(&self) -> PyResult<(f64, f64, Vec<(usize, f64)>, Vec<f64>)> {
        let s = semisep::gap_and_weights(&self.0).map_err(py_err)?;
        Ok((s.gap, s.alpha, s.weights, s.combined.concat()))
    }

    fn delta_segment(&self) -> PyResult<Option<(f64, f64)>> {
        semisep::delta_segment(&self.0).map_err(py_err)
    }
}

/// Constant-step CoMP on `min_{‖x‖≤r_x} max_{‖y‖≤r_y} ⟨y, Ax − b⟩`.
/// Returns `(t, resolution, eps_sad)` at powers of two.
#[pyfunction]
#[pyo3(signature = (a, b, iters, radius_x = 1.0, radius_y = 1.0))]
fn bilinear_ball(a: Vec<Vec<f64>>, b: Vec<f64>, iters: usize, radius_x: f64, radius_y: f64) -> PyResult<Vec<(usize, f64, f64)>> {
    let (data, rows, cols) = flatten(&a)?;
    let problem = BilinearBall::new(DenseMatrix::new(rows, cols, data).map_err(py_err)?, b, radius_x, radius_y).map_err(py_err)?;
    let l = problem.lipschitz_hint().filter(|l| *l > 0.0).ok_or_else(|| PyValueError::new_err("matrix must be nonzero"))?;
    let layout = problem.layout();
    let setup = AggregatedSetup::euclidean(vec![1.0, 1.0]).map_err(py_err)?;
    let config = RunConfig {
        max_iters: iters,
        step: StepMode::Constant(1.0 / l),
        checkpoints: Checkpoints::PowersOfTwo,
        record_protocol: false,
        domain: Some(problem.domain()),
    };
    let out = run(&problem, &setup, &layout, layout.zeros(), &config, Some(&problem), &mut NoObserver).map_err(py_err)?;
    Ok(out
        .checkpoints
        .iter()
        .map(|c| (c.t, c.resolution.unwrap_or(f64::NAN), c.eps_sad.unwrap_or(f64::NAN)))
        .collect())
}

#[pyclass(name = "SolveSummary", get_all, frozen)]
struct PySolveSummary {
    family: String,
    mode: String,
    seed: u64,
    steps: usize,
    upper: f64,
    lower: f64,
    relative_gap: f64,
    restarts: usize,
    seconds: f64,
    extra: Vec<(String, String)>,
    /// `(t, seconds, upper, lower, gap, rho_or_alpha, restarts)`
    rows: Vec<(usize, f64, f64, f64, f64, f64, usize)>,
}

impl From<SolveSummary> for PySolveSummary {
    fn from(s: SolveSummary) -> Self {
        Self {
            family: s.family.to_string(),
            mode: s.mode.to_string(),
            seed: s.seed,
            steps: s.steps,
            upper: s.upper,
            lower: s.lower,
            relative_gap: s.relative_gap,
            restarts: s.restarts,
            seconds: s.seconds,
            extra: s.extra,
            rows: s.rows.iter().map(|r| (r.t, r.seconds, r.upper, r.lower, r.gap, r.rho_or_alpha, r.restarts)).collect(),
        }
    }
}

#[pymethods]
impl PySolveSummary {
    fn __repr__(&self) -> String {
        format!("SolveSummary(family={}, mode={}, steps={}, upper={:e}, lower={:e})", self.family, self.mode, self.steps, self.upper, self.lower)
    }
}

/// Configuration keys and their defaults.
#[pyfunction]
fn default_config() -> Vec<(String, String)> {
    InstanceConfig::default().entries().into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// Generate and solve one instance. Keyword options use the config-file keys,
/// e.g. `solve("mc_known_opt", n=32, max_iters=256)`.
#[pyfunction]
#[pyo3(signature = (family, **options))]
fn solve(py: Python<'_>, family: &str, options: Option<&Bound<'_, PyDict>>) -> PyResult<PySolveSummary> {
    let mut cfg = InstanceConfig::default();
    cfg.set("family", family).map_err(py_err)?;
    if let Some(opts) = options {
        for (k, v) in opts.iter() {
            let key: String = k.extract()?;
            let value = if v.is_instance_of::<PyBool>() { v.extract::<bool>()?.to_string() } else { v.str()?.to_string() };
            cfg.set(&key, &value).map_err(py_err)?;
        }
    }
    let summary = py.detach(|| run_solve(&cfg)).map_err(py_err)?;
    Ok(summary.into())
}

#[pymodule]
fn comp_prox_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(soft_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(singular_value_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(ball_l2_l1_prox, m)?)?;
    m.add_function(wrap_pyfunction!(capped_simplex_project, m)?)?;
    m.add_function(wrap_pyfunction!(bilinear_ball, m)?)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_class::<PyFilter>()?;
    m.add_class::<PySolveSummary>()?;
    Ok(())
}

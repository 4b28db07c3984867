//! Python bindings for the qdbound core library.
//!
//! Matrices cross the boundary as nested sequences of complex numbers (lists
//! or 2-D NumPy arrays); reports come back as plain dicts.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

use qdbound::bounds::{self, ScenarioParams, VerifyOptions};
use qdbound::campaign::{self, CampaignConfig};
use qdbound::cdd::{self, CddRunConfig};
use qdbound::dynamics::{self, HamiltonianSchedule};
use qdbound::linalg::{self, ComplexMatrix, SubsystemDims};
use qdbound::norms::{self, NormKind};
use qdbound::superop;

type Rows = Vec<Vec<Complex64>>;

fn value_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_matrix(rows: Rows) -> PyResult<ComplexMatrix> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(PyValueError::new_err("matrix rows must all have the same length"));
    }
    let nrows = rows.len();
    ComplexMatrix::from_row_major(nrows, ncols, rows.into_iter().flatten().collect()).map_err(value_err)
}

fn to_rows(m: &ComplexMatrix) -> Rows {
    (0..m.rows()).map(|i| (0..m.cols()).map(|j| m[(i, j)]).collect()).collect()
}

/// Serializes through JSON so Python receives ordinary dicts and lists.
fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(value_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn parse_kind(kind: &str, k: Option<usize>) -> PyResult<NormKind> {
    match (kind, k) {
        ("trace", None) => Ok(NormKind::Trace),
        ("frobenius", None) => Ok(NormKind::Frobenius),
        ("operator", None) => Ok(NormKind::Operator),
        ("kyfan", Some(k)) => Ok(NormKind::KyFan(k)),
        ("kyfan", None) => Err(PyValueError::new_err("kyfan needs k")),
        (other, _) => {
            Err(PyValueError::new_err(format!("unknown norm {other:?}; expected trace, frobenius, operator or kyfan")))
        }
    }
}

/// Trace, Frobenius, operator and all Ky Fan norms plus the ordering verdict.
#[pyfunction]
fn norm_summary<'py>(py: Python<'py>, m: Rows) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &norms::summarize(&to_matrix(m)?))
}

/// One unitarily invariant norm: "trace", "frobenius", "operator" or "kyfan" with k.
#[pyfunction]
#[pyo3(signature = (m, kind, k=None))]
fn norm(m: Rows, kind: &str, k: Option<usize>) -> PyResult<f64> {
    norms::norm(&to_matrix(m)?, parse_kind(kind, k)?).map_err(value_err)
}

/// Partial trace over the second (bath) factor.
#[pyfunction]
fn partial_trace(x: Rows, ds: usize, db: usize) -> PyResult<Rows> {
    let dims = SubsystemDims::new(ds, db).map_err(value_err)?;
    Ok(to_rows(&linalg::partial_trace_b(&to_matrix(x)?, dims).map_err(value_err)?))
}

#[pyfunction]
fn trace_distance(rho1: Rows, rho2: Rows) -> PyResult<f64> {
    bounds::trace_distance(&to_matrix(rho1)?, &to_matrix(rho2)?).map_err(value_err)
}

#[pyfunction]
fn fidelity(rho1: Rows, rho2: Rows) -> PyResult<f64> {
    bounds::fidelity(&to_matrix(rho1)?, &to_matrix(rho2)?).map_err(value_err)
}

/// min(1, ½(e^{t·n} − 1)).
#[pyfunction]
fn theorem1_bound(t: f64, delta_l_norm: f64) -> PyResult<f64> {
    bounds::theorem1_bound(t, delta_l_norm).map_err(value_err)
}

/// Ω(t) with U = e^{−itΩ}; returns (omega, branch_margin).
#[pyfunction]
fn effective_hamiltonian(u: Rows, t: f64) -> PyResult<(Rows, Option<f64>)> {
    let r = dynamics::effective_hamiltonian(&to_matrix(u)?, t).map_err(value_err)?;
    Ok((to_rows(&r.omega), r.branch_margin))
}

/// Piecewise-constant Hamiltonian with optional instantaneous pulses.
#[pyclass(name = "Schedule")]
struct PySchedule {
    inner: HamiltonianSchedule,
}

#[pymethods]
impl PySchedule {
    /// Pulse-free schedule from (duration, H) pairs.
    #[new]
    fn new(pieces: Vec<(f64, Rows)>) -> PyResult<Self> {
        let pieces = pieces.into_iter().map(|(d, h)| Ok((d, to_matrix(h)?))).collect::<PyResult<Vec<_>>>()?;
        Ok(Self { inner: HamiltonianSchedule::from_pieces(pieces).map_err(value_err)? })
    }

    /// Accepts the `{"segments": [...]}` form, which can include pulses.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: serde_json::from_str(text).map_err(value_err)? })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(value_err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn duration(&self) -> f64 {
        self.inner.total_duration()
    }

    #[getter]
    fn has_pulses(&self) -> bool {
        self.inner.has_pulses()
    }

    fn propagator(&self) -> PyResult<Rows> {
        Ok(to_rows(&dynamics::propagator(&self.inner).map_err(value_err)?))
    }

    /// Ω₁ + Ω₂ of the Magnus series; pulse-free schedules only.
    fn magnus12(&self) -> PyResult<Rows> {
        Ok(to_rows(&dynamics::magnus_term12(&self.inner).map_err(value_err)?))
    }

    /// ‖Ω̃‖ ≤ ⟨‖V‖⟩ ≤ sup‖V‖ report with `self` as H₀.
    #[pyo3(signature = (v, kind="operator", k=None))]
    fn corollary2<'py>(
        &self,
        py: Python<'py>,
        v: &PySchedule,
        kind: &str,
        k: Option<usize>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let r = dynamics::corollary2_check(&self.inner, &v.inner, parse_kind(kind, k)?).map_err(value_err)?;
        to_py(py, &r)
    }

    fn __repr__(&self) -> String {
        format!(
            "Schedule(dim={}, duration={}, segments={})",
            self.inner.dim(),
            self.inner.total_duration(),
            self.inner.segments().len()
        )
    }
}

/// Linear map on d×d matrices, stored as a d²×d² column-stacking matrix.
#[pyclass(name = "SuperOperator")]
struct PySuperOperator {
    inner: superop::SuperOperator,
}

#[pymethods]
impl PySuperOperator {
    /// ρ ↦ −i[Ω, ρ].
    #[staticmethod]
    fn commutator(omega: Rows) -> PyResult<Self> {
        Ok(Self { inner: superop::commutator_generator(&to_matrix(omega)?).map_err(value_err)? })
    }

    /// ρ ↦ UρU†.
    #[staticmethod]
    fn conjugation(u: Rows) -> PyResult<Self> {
        Ok(Self { inner: superop::conjugation_channel(&to_matrix(u)?).map_err(value_err)? })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn matrix(&self) -> Rows {
        to_rows(self.inner.matrix())
    }

    fn apply(&self, rho: Rows) -> PyResult<Rows> {
        Ok(to_rows(&self.inner.apply(&to_matrix(rho)?).map_err(value_err)?))
    }

    /// e^{tL}.
    fn exp(&self, t: f64) -> PyResult<Self> {
        Ok(Self { inner: superop::superop_exp(&self.inner, t).map_err(value_err)? })
    }

    /// Lower estimate of the trace-to-trace induced norm.
    #[pyo3(signature = (samples=superop::DEFAULT_SAMPLES, iters=superop::DEFAULT_REFINE_ITERS, seed=0))]
    fn ot_norm_lower(&self, samples: usize, iters: usize, seed: u64) -> PyResult<f64> {
        Ok(superop::ot_norm_lower(&self.inner, samples, iters, seed).map_err(value_err)?.value)
    }
}

/// Random joint scenario as JSON, ready for `verify_scenario`.
#[pyfunction]
#[pyo3(signature = (ds, db, seed, stream=0))]
fn random_scenario(ds: usize, db: usize, seed: u64, stream: u64) -> PyResult<String> {
    let params = ScenarioParams::new(SubsystemDims::new(ds, db).map_err(value_err)?);
    let sc = bounds::random_scenario(&params, seed, stream).map_err(value_err)?;
    serde_json::to_string(&sc).map_err(value_err)
}

/// Full bound report for a scenario given as JSON.
#[pyfunction]
#[pyo3(signature = (scenario_json, ot_samples=8, ot_iters=50, seed=0))]
fn verify_scenario<'py>(
    py: Python<'py>,
    scenario_json: &str,
    ot_samples: usize,
    ot_iters: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let sc: bounds::Scenario = serde_json::from_str(scenario_json).map_err(value_err)?;
    let report = bounds::verify_scenario(&sc, &VerifyOptions { ot_samples, ot_iters, seed }).map_err(value_err)?;
    to_py(py, &report)
}

/// J·T·(βT/√N)^{log₄N} with N = 4^level, T = Nτ.
#[pyfunction]
fn phi_cdd_bound(j: f64, beta: f64, tau: f64, level: u32) -> PyResult<f64> {
    cdd::phi_cdd_bound(j, beta, tau, level).map_err(value_err)
}

/// Runs a decoupling experiment config; returns one dict per level.
#[pyfunction]
fn run_cdd<'py>(py: Python<'py>, config_json: &str) -> PyResult<Bound<'py, PyAny>> {
    let cfg = CddRunConfig::from_json(config_json).map_err(value_err)?;
    to_py(py, &cfg.run().map_err(value_err)?)
}

/// Runs a fuzz campaign config in memory; returns the full report.
#[pyfunction]
fn run_campaign<'py>(py: Python<'py>, config_json: &str) -> PyResult<Bound<'py, PyAny>> {
    let cfg = CampaignConfig::from_json(config_json).map_err(value_err)?;
    to_py(py, &campaign::run_campaign(&cfg).map_err(value_err)?)
}

#[pymodule]
fn qdbound_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySchedule>()?;
    m.add_class::<PySuperOperator>()?;
    m.add_function(wrap_pyfunction!(norm_summary, m)?)?;
    m.add_function(wrap_pyfunction!(norm, m)?)?;
    m.add_function(wrap_pyfunction!(partial_trace, m)?)?;
    m.add_function(wrap_pyfunction!(trace_distance, m)?)?;
    m.add_function(wrap_pyfunction!(fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(theorem1_bound, m)?)?;
    m.add_function(wrap_pyfunction!(effective_hamiltonian, m)?)?;
    m.add_function(wrap_pyfunction!(random_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(verify_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(phi_cdd_bound, m)?)?;
    m.add_function(wrap_pyfunction!(run_cdd, m)?)?;
    m.add_function(wrap_pyfunction!(run_campaign, m)?)?;
    Ok(())
}

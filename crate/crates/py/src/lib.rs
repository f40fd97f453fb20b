//! Python bindings: `import pulsed_rotor_py as pr`.
//!
//! Library errors surface as `ValueError` for out-of-domain arguments and
//! `RuntimeError` for everything else.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use pulsed_rotor::analytic;
use pulsed_rotor::io::{write_plots, write_records, Format, PlotKind, RunMetadata};
use pulsed_rotor::observables::{polar_density, ObservableSet};
use pulsed_rotor::propagator::{
    self, converge_basis_with_cap, PropagationReport, Status, DEFAULT_J_MAX_CAP, DEFAULT_LEAK_TOL, DEFAULT_ODE_STEPS,
};
use pulsed_rotor::rotor::{self, RotorBasis, Wavepacket};
use pulsed_rotor::sweep::{self, BasisPolicy, SweepGrid, SweepOptions, DEFAULT_DROP_THRESHOLD};
use pulsed_rotor::validation::{self, ValidationOptions};
use pulsed_rotor::{Error, C64};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Domain(m) => PyValueError::new_err(m),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

/// Rectangular pulse in reduced units: strength `P` and duration `sigma`.
#[pyclass(frozen, from_py_object, name = "PulseSpec", module = "pulsed_rotor_py")]
#[derive(Clone, Copy)]
struct PyPulseSpec(rotor::PulseSpec);

#[pymethods]
impl PyPulseSpec {
    #[new]
    #[pyo3(signature = (p, sigma))]
    fn new(p: f64, sigma: f64) -> PyResult<Self> {
        rotor::PulseSpec::new(p, sigma).map(Self).map_err(py_err)
    }

    /// Builds the pulse from the coupling `eta = P / sigma`.
    #[staticmethod]
    fn from_eta(eta: f64, sigma: f64) -> PyResult<Self> {
        rotor::PulseSpec::from_eta(eta, sigma).map(Self).map_err(py_err)
    }

    #[getter(P)]
    fn p(&self) -> f64 {
        self.0.strength()
    }

    #[getter]
    fn sigma(&self) -> f64 {
        self.0.duration()
    }

    #[getter]
    fn eta(&self) -> f64 {
        self.0.eta()
    }

    fn __repr__(&self) -> String {
        format!("PulseSpec(P={}, sigma={})", self.0.strength(), self.0.duration())
    }
}

/// Final wavepacket of one propagation plus its observables.
#[pyclass(frozen, name = "State", module = "pulsed_rotor_py")]
struct PyState {
    state: Wavepacket,
    obs: ObservableSet,
    method: &'static str,
    norm_drift: f64,
    basis_leak: f64,
    warning: Option<String>,
}

impl PyState {
    fn from_state(state: Wavepacket, method: &'static str) -> Self {
        let obs = ObservableSet::of(&state);
        let norm_drift = (1.0 - state.norm_sqr()).abs();
        let basis_leak = state.coefficients().iter().rev().take(2).map(|c| c.norm_sqr()).sum();
        Self { state, obs, method, norm_drift, basis_leak, warning: None }
    }

    fn from_report(report: PropagationReport) -> Self {
        let method = match report.method {
            propagator::Method::Spectral => "spectral",
            propagator::Method::OdeRk4 => "ode",
        };
        let warning = match report.status {
            Status::Ok => None,
            Status::Warning(w) => Some(w),
        };
        Self {
            obs: ObservableSet::of(&report.final_state),
            state: report.final_state,
            method,
            norm_drift: report.norm_drift,
            basis_leak: report.basis_leak,
            warning,
        }
    }
}

#[pymethods]
impl PyState {
    #[getter]
    fn coefficients(&self) -> Vec<C64> {
        self.state.coefficients().to_vec()
    }

    #[getter]
    fn populations(&self) -> Vec<f64> {
        self.obs.populations.clone()
    }

    /// `<J^2>` in units of `B`.
    #[getter]
    fn kinetic_energy(&self) -> f64 {
        self.obs.kinetic_energy
    }

    #[getter]
    fn orientation(&self) -> f64 {
        self.obs.orientation
    }

    #[getter]
    fn alignment(&self) -> f64 {
        self.obs.alignment
    }

    #[getter]
    fn j0(&self) -> usize {
        self.state.initial_state()
    }

    #[getter]
    fn j_max(&self) -> usize {
        self.state.basis().j_max()
    }

    #[getter]
    fn method(&self) -> &'static str {
        self.method
    }

    #[getter]
    fn norm_drift(&self) -> f64 {
        self.norm_drift
    }

    #[getter]
    fn basis_leak(&self) -> f64 {
        self.basis_leak
    }

    /// Set when the RK4 norm drift exceeded its warning level.
    #[getter]
    fn warning(&self) -> Option<String> {
        self.warning.clone()
    }

    /// Angular probability density `|sum_J C_J Y_J0(theta)|^2` at the given
    /// polar angles; it integrates to one over the full sphere.
    fn polar_density(&self, thetas: Vec<f64>) -> Vec<f64> {
        polar_density(&self.state, &thetas)
    }

    fn __repr__(&self) -> String {
        format!(
            "State(j0={}, j_max={}, energy={:.6}, orientation={:.6}, alignment={:.6})",
            self.j0(),
            self.j_max(),
            self.obs.kinetic_energy,
            self.obs.orientation,
            self.obs.alignment
        )
    }
}

fn basis_for(pulse: &rotor::PulseSpec, j0: usize, j_max: Option<usize>, leak_tol: f64, cap: usize) -> PyResult<RotorBasis> {
    match j_max {
        Some(j) => RotorBasis::new(j),
        None => converge_basis_with_cap(pulse, j0, leak_tol, cap),
    }
    .map_err(py_err)
}

/// Propagates `|J0, 0>` through the pulse. Without `j_max` the basis grows
/// until the top two levels hold less than `leak_tol`.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (pulse, j0=0, j_max=None, method="spectral", ode_steps=DEFAULT_ODE_STEPS, leak_tol=DEFAULT_LEAK_TOL, j_max_cap=DEFAULT_J_MAX_CAP))]
fn propagate(
    py: Python<'_>,
    pulse: PyPulseSpec,
    j0: usize,
    j_max: Option<usize>,
    method: &str,
    ode_steps: usize,
    leak_tol: f64,
    j_max_cap: usize,
) -> PyResult<PyState> {
    let pulse = pulse.0;
    let ode = match method.to_ascii_lowercase().as_str() {
        "spectral" => false,
        "ode" | "rk4" => true,
        other => return Err(PyValueError::new_err(format!("method must be 'spectral' or 'ode', got '{other}'"))),
    };
    let report = py.detach(|| {
        let basis = basis_for(&pulse, j0, j_max, leak_tol, j_max_cap)?;
        if ode {
            propagator::propagate_ode(&pulse, j0, basis, ode_steps)
        } else {
            propagator::propagate_spectral(&pulse, j0, basis)
        }
        .map_err(py_err)
    })?;
    Ok(PyState::from_report(report))
}

/// Impulsive limit: `exp(i P cos(theta)) |J0, 0>` projected onto `0..=j_max`.
#[pyfunction]
#[pyo3(signature = (p, j0=0, j_max=40))]
fn delta_kick(p: f64, j0: usize, j_max: usize) -> PyResult<PyState> {
    let basis = RotorBasis::new(j_max).map_err(py_err)?;
    let state = propagator::delta_kick(p, j0, basis).map_err(py_err)?;
    Ok(PyState::from_state(state, "kick"))
}

/// Two-level transfer amplitude `C_1` (J0 = 0) or `C_2` (J0 = 1) after the pulse.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (pulse, j0=0))]
fn two_level_amplitude(pulse: PyPulseSpec, j0: usize) -> PyResult<C64> {
    match j0 {
        0 => Ok(analytic::coefficient_c1_of_0(&pulse.0)),
        1 => Ok(analytic::coefficient_c2_of_1(&pulse.0)),
        _ => Err(PyValueError::new_err(format!("two-level amplitude exists for j0 in (0, 1), got {j0}"))),
    }
}

/// `[(n, sigma_exact, sigma_taylor), ...]` for the real roots with `n <= n_max`.
#[pyfunction]
#[pyo3(signature = (p, j0=0, n_max=5))]
fn zero_loci(p: f64, j0: usize, n_max: usize) -> PyResult<Vec<(usize, f64, f64)>> {
    let loci = analytic::zero_loci(j0, p, n_max).map_err(py_err)?;
    Ok(loci.into_iter().map(|l| (l.n, l.sigma_exact, l.sigma_taylor)).collect())
}

#[pyfunction]
#[pyo3(signature = (j0=0))]
fn existence_threshold(j0: usize) -> PyResult<f64> {
    analytic::existence_threshold(j0).map_err(py_err)
}

#[pyfunction]
fn uniform_axis(min: f64, max: f64, step: f64) -> PyResult<Vec<f64>> {
    sweep::uniform_axis(min, max, step).map_err(py_err)
}

/// Outcome of a `(P, sigma)` sweep.
#[pyclass(frozen, name = "SweepResult", module = "pulsed_rotor_py")]
struct PySweepResult(sweep::SweepResult);

#[pymethods]
impl PySweepResult {
    #[getter]
    fn p_values(&self) -> Vec<f64> {
        self.0.grid.p_values().to_vec()
    }

    #[getter]
    fn sigma_values(&self) -> Vec<f64> {
        self.0.grid.sigma_values().to_vec()
    }

    /// Kinetic energy as rows over sigma, one row per P; failed points are NaN.
    #[getter]
    fn energy(&self) -> Vec<Vec<f64>> {
        let n = self.0.grid.sigma_values().len();
        self.0.energy_surface().chunks(n).map(<[f64]>::to_vec).collect()
    }

    /// `(P, sigma, energy)` of every detected drop.
    #[getter]
    fn drops(&self) -> Vec<(f64, f64, f64)> {
        self.0.drop_loci.iter().map(|d| (d.p, d.sigma, d.energy)).collect()
    }

    #[getter]
    fn minima(&self) -> Vec<(f64, f64, f64)> {
        self.0.minima_2d.iter().map(|d| (d.p, d.sigma, d.energy)).collect()
    }

    /// Shared slope of the minima lines, if a fit was possible.
    #[getter]
    fn slope(&self) -> Option<f64> {
        self.0.minima_line_fit.as_ref().map(|f| f.slope)
    }

    /// `(P, sigma, reason)` for every point that failed.
    #[getter]
    fn failures(&self) -> Vec<(f64, f64, String)> {
        self.0.failures().map(|f| (f.p, f.sigma, f.reason.clone())).collect()
    }

    /// Writes records and figures into `out_dir`; returns the paths written.
    #[pyo3(signature = (out_dir, formats=vec!["csv".to_string(), "json".to_string(), "svg".to_string()]))]
    fn write(&self, out_dir: PathBuf, formats: Vec<String>) -> PyResult<Vec<PathBuf>> {
        std::fs::create_dir_all(&out_dir).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        let metadata = RunMetadata::new(BTreeMap::new());
        let two_d = self.0.grid.p_values().len() >= 2 && self.0.grid.sigma_values().len() >= 2;
        let kinds: Vec<PlotKind> =
            PlotKind::ALL.into_iter().filter(|k| two_d || *k != PlotKind::SurfaceHeatmap).collect();
        let mut written = Vec::new();
        for name in formats {
            let format: Format =
                name.parse().map_err(|_| PyValueError::new_err(format!("unknown format '{name}'")))?;
            let files = match format {
                Format::Svg => write_plots(&self.0, &kinds, &out_dir),
                f => write_records(&self.0, f, &out_dir, &metadata),
            }
            .map_err(py_err)?;
            written.extend(files);
        }
        Ok(written)
    }

    fn __len__(&self) -> usize {
        self.0.points.len()
    }
}

/// Propagates every `(P, sigma)` pair in parallel and detects drops and minima.
#[pyfunction]
#[pyo3(signature = (p_values, sigma_values, j0=0, j_max=None, workers=None, drop_threshold=DEFAULT_DROP_THRESHOLD))]
fn run_sweep(
    py: Python<'_>,
    p_values: Vec<f64>,
    sigma_values: Vec<f64>,
    j0: usize,
    j_max: Option<usize>,
    workers: Option<usize>,
    drop_threshold: f64,
) -> PyResult<PySweepResult> {
    let basis = j_max.map_or_else(BasisPolicy::default, |j_max| BasisPolicy::Fixed { j_max });
    let grid = SweepGrid::new(p_values, sigma_values, j0, basis).map_err(py_err)?;
    let options = SweepOptions { workers, drop_threshold, surface_ceiling: None };
    let result = py.detach(|| sweep::run_sweep(&grid, &options)).map_err(py_err)?;
    Ok(PySweepResult(result))
}

/// Runs the reproduction checks; returns `(id, name, passed, measured, expected)`
/// tuples.
#[pyfunction]
#[pyo3(signature = (include_surface=false, workers=None))]
fn validate(py: Python<'_>, include_surface: bool, workers: Option<usize>) -> Vec<(u32, String, bool, String, String)> {
    let options = ValidationOptions { workers, include_surface, ..ValidationOptions::default() };
    py.detach(|| validation::run_all(&options))
        .into_iter()
        .map(|o| (o.id, o.name, o.passed, o.measured, o.expected))
        .collect()
}

#[pymodule]
fn pulsed_rotor_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPulseSpec>()?;
    m.add_class::<PyState>()?;
    m.add_class::<PySweepResult>()?;
    m.add_function(wrap_pyfunction!(propagate, m)?)?;
    m.add_function(wrap_pyfunction!(delta_kick, m)?)?;
    m.add_function(wrap_pyfunction!(two_level_amplitude, m)?)?;
    m.add_function(wrap_pyfunction!(zero_loci, m)?)?;
    m.add_function(wrap_pyfunction!(existence_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(uniform_axis, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}

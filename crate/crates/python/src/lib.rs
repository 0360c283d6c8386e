//! Python bindings for `twofold`.
//!
//! Internal states are `State` objects, wavepacket parameters are
//! `Wavepackets`. The exchange sign is passed as `eta = +1` or `-1`.

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use twofold_core::duality::{self, DualityRecord, DualitySettings, Experiment};
use twofold_core::hbt::{self, FringePattern, WavepacketConfig};
use twofold_core::{hom, internal, sampling, Error, ExchangeSign, InternalState};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } | Error::Format { .. } => PyIOError::new_err(e.to_string()),
        Error::InvalidParameter { .. } | Error::NotNormalized { .. } => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn sign(eta: i32) -> PyResult<ExchangeSign> {
    match eta {
        1 => Ok(ExchangeSign::Boson),
        -1 => Ok(ExchangeSign::Fermion),
        _ => Err(PyValueError::new_err(format!("eta must be +1 or -1, got {eta}"))),
    }
}

fn experiment(name: &str) -> PyResult<Experiment> {
    name.parse()
        .map_err(|_| PyValueError::new_err(format!("unknown experiment {name:?}")))
}

/// Normalized two-level internal state.
#[pyclass(name = "State", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyState(InternalState);

#[pymethods]
impl PyState {
    /// Builds a state from complex amplitudes, renormalizing small drift.
    #[new]
    fn new(a0: num_complex::Complex64, a1: num_complex::Complex64) -> PyResult<Self> {
        InternalState::new(a0, a1).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn from_bloch(theta: f64, phi: f64) -> Self {
        Self(InternalState::from_bloch(theta, phi))
    }

    /// Real state with `⟨0|d⟩ = s`.
    #[staticmethod]
    fn with_overlap(s: f64) -> PyResult<Self> {
        InternalState::with_overlap(s).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn zero() -> Self {
        Self(InternalState::zero())
    }

    fn amplitudes(&self) -> (num_complex::Complex64, num_complex::Complex64) {
        let [a0, a1] = self.0.amplitudes();
        (a0, a1)
    }

    fn orthogonal(&self) -> Self {
        Self(self.0.orthogonal())
    }

    fn inner(&self, other: &PyState) -> num_complex::Complex64 {
        self.0.inner(&other.0)
    }

    fn __repr__(&self) -> String {
        let [a0, a1] = self.0.amplitudes();
        format!("State({a0}, {a1})")
    }
}

/// Wavepacket parameters for the HBT experiment.
#[pyclass(name = "Wavepackets", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyWavepackets(WavepacketConfig);

#[pymethods]
impl PyWavepackets {
    #[new]
    #[pyo3(signature = (x0=10.0, epsilon=1.0, mass=1.0, time=100.0))]
    fn new(x0: f64, epsilon: f64, mass: f64, time: f64) -> PyResult<Self> {
        WavepacketConfig::new(x0, epsilon, mass, time).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn from_delta(x0: f64, epsilon: f64, delta: f64) -> PyResult<Self> {
        WavepacketConfig::from_delta(x0, epsilon, delta)
            .map(Self)
            .map_err(to_py)
    }

    #[staticmethod]
    fn far_field() -> Self {
        Self(WavepacketConfig::far_field())
    }

    #[getter]
    fn x0(&self) -> f64 {
        self.0.x0()
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.0.epsilon()
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.0.delta()
    }

    #[getter]
    fn fringe_period(&self) -> f64 {
        self.0.fringe_period()
    }

    #[getter]
    fn fringe_wavenumber(&self) -> f64 {
        self.0.fringe_wavenumber()
    }

    #[getter]
    fn source_overlap(&self) -> f64 {
        self.0.source_overlap()
    }

    #[pyo3(signature = (s, eta=1))]
    fn normalization(&self, s: f64, eta: i32) -> PyResult<f64> {
        Ok(self.0.normalization(sign(eta)?, s))
    }

    fn __repr__(&self) -> String {
        format!(
            "Wavepackets(x0={}, epsilon={}, delta={})",
            self.0.x0(),
            self.0.epsilon(),
            self.0.delta()
        )
    }
}

#[pyfunction]
fn make_state(theta: f64, phi: f64) -> PyState {
    PyState(internal::make_state(theta, phi))
}

/// Complex overlap `⟨d_A|d_B⟩`.
#[pyfunction]
fn overlap(d_a: &PyState, d_b: &PyState) -> num_complex::Complex64 {
    internal::overlap(&d_a.0, &d_b.0).value()
}

#[pyfunction]
fn distinguishability(d_a: &PyState, d_b: &PyState) -> f64 {
    internal::distinguishability(&d_a.0, &d_b.0)
}

#[pyfunction]
fn distinguishability_uqsd(d_a: &PyState, d_b: &PyState) -> f64 {
    internal::distinguishability_uqsd(&d_a.0, &d_b.0)
}

#[pyfunction]
#[pyo3(signature = (d_a, d_b, eta=1))]
fn coincidence_probability(d_a: &PyState, d_b: &PyState, eta: i32) -> PyResult<f64> {
    Ok(hom::coincidence_probability_with(&d_a.0, &d_b.0, sign(eta)?))
}

/// Coincidence probability from the explicit term expansion.
#[pyfunction]
#[pyo3(signature = (d_a, d_b, eta=1))]
fn brute_force_coincidence(d_a: &PyState, d_b: &PyState, eta: i32) -> PyResult<f64> {
    hom::brute_force_coincidence_with(&d_a.0, &d_b.0, sign(eta)?).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (d_a, d_b, eta=1))]
fn bunching_probability(d_a: &PyState, d_b: &PyState, eta: i32) -> PyResult<f64> {
    Ok(hom::bunching_probability(&d_a.0, &d_b.0, sign(eta)?))
}

#[pyfunction]
fn hom_visibility(d_a: &PyState, d_b: &PyState) -> f64 {
    hom::hom_visibility(&d_a.0, &d_b.0)
}

/// List of `(tau, p_c)` pairs.
#[pyfunction]
fn delay_scan(d_a: &PyState, d_b: &PyState, sigma_t: f64, taus: Vec<f64>) -> PyResult<Vec<(f64, f64)>> {
    hom::delay_scan(&d_a.0, &d_b.0, sigma_t, &taus).map_err(to_py)
}

#[pyfunction]
fn eraser_joint_probability(d_a: &PyState, d_b: &PyState, e1: &PyState, e2: &PyState) -> f64 {
    hom::eraser_joint_probability(&d_a.0, &d_b.0, &e1.0, &e2.0)
}

#[pyfunction]
#[pyo3(signature = (x1, x2, cfg, s, eta=1))]
fn joint_density(x1: f64, x2: f64, cfg: &PyWavepackets, s: f64, eta: i32) -> PyResult<f64> {
    Ok(hbt::joint_density_analytic(x1, x2, &cfg.0, sign(eta)?, s))
}

fn pattern_dict<'py>(py: Python<'py>, p: &FringePattern) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("separations", &p.separations)?;
    d.set_item("densities", &p.densities)?;
    d.set_item("corrected", &p.corrected)?;
    d.set_item("period", p.period)?;
    Ok(d)
}

/// Analytic fringe pattern along `x1 − x2` as a dict of lists.
#[pyfunction]
#[pyo3(signature = (cfg, d_a, d_b, eta=1, periods=4, points_per_period=64))]
fn fringe_pattern<'py>(
    py: Python<'py>,
    cfg: &PyWavepackets,
    d_a: &PyState,
    d_b: &PyState,
    eta: i32,
    periods: usize,
    points_per_period: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let p =
        FringePattern::from_states(&cfg.0, sign(eta)?, &d_a.0, &d_b.0, periods, points_per_period).map_err(to_py)?;
    pattern_dict(py, &p)
}

/// Post-selected pattern for internal outcomes `e1` at `x1`, `e2` at `x2`.
#[pyfunction]
#[pyo3(signature = (cfg, d_a, d_b, e1, e2, eta=1, periods=4, points_per_period=64))]
#[allow(clippy::too_many_arguments)]
fn eraser_pattern<'py>(
    py: Python<'py>,
    cfg: &PyWavepackets,
    d_a: &PyState,
    d_b: &PyState,
    e1: &PyState,
    e2: &PyState,
    eta: i32,
    periods: usize,
    points_per_period: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let p = FringePattern::eraser(
        &cfg.0,
        sign(eta)?,
        &d_a.0,
        &d_b.0,
        &e1.0,
        &e2.0,
        periods,
        points_per_period,
    )
    .map_err(to_py)?;
    pattern_dict(py, &p)
}

/// Visibility of a sampled pattern. `corrected` defaults to `densities`.
#[pyfunction]
#[pyo3(signature = (separations, densities, period, corrected=None))]
fn extract_visibility(
    separations: Vec<f64>,
    densities: Vec<f64>,
    period: f64,
    corrected: Option<Vec<f64>>,
) -> PyResult<f64> {
    let corrected = corrected.unwrap_or_else(|| densities.clone());
    let p = FringePattern::new(separations, densities, corrected, period).map_err(to_py)?;
    hbt::extract_visibility(&p).map_err(to_py)
}

/// HOM outcome labels: "coincidence", "bunched-D1" or "bunched-D2".
#[pyfunction]
#[pyo3(signature = (d_a, d_b, n, seed=0, eta=1))]
fn sample_hom(d_a: &PyState, d_b: &PyState, n: usize, seed: u64, eta: i32) -> PyResult<Vec<&'static str>> {
    let batch = sampling::sample_hom_with(&d_a.0, &d_b.0, sign(eta)?, n, seed).map_err(to_py)?;
    match batch.events {
        sampling::Events::Hom(e) => Ok(e.into_iter().map(|o| o.label()).collect()),
        sampling::Events::Hbt(_) => unreachable!(),
    }
}

/// Detector position pairs `(x1, x2)`.
#[pyfunction]
#[pyo3(signature = (cfg, s, n, seed=0, eta=1))]
fn sample_hbt(cfg: &PyWavepackets, s: f64, n: usize, seed: u64, eta: i32) -> PyResult<Vec<(f64, f64)>> {
    let batch = sampling::sample_hbt(&cfg.0, sign(eta)?, s, n, seed).map_err(to_py)?;
    Ok(batch.hbt_events().map(<[_]>::to_vec).unwrap_or_default())
}

/// Histogram fit of sampled positions; returns a dict with `visibility`,
/// `std_error`, `phase`, `bin_edges` and `counts`.
#[pyfunction]
#[pyo3(signature = (events, cfg, seed=0))]
fn estimate_visibility<'py>(
    py: Python<'py>,
    events: Vec<(f64, f64)>,
    cfg: &PyWavepackets,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let batch = sampling::EventBatch {
        seed,
        events: sampling::Events::Hbt(events),
        acceptance_rate: None,
    };
    let est = sampling::estimate_visibility(&batch, &cfg.0).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("visibility", est.visibility)?;
    d.set_item("std_error", est.std_error)?;
    d.set_item("phase", est.phase)?;
    d.set_item("bin_edges", est.bin_edges)?;
    d.set_item("counts", est.counts)?;
    Ok(d)
}

fn record_dict<'py>(py: Python<'py>, r: &DualityRecord) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("s", r.overlap_modulus)?;
    d.set_item("D", r.distinguishability)?;
    d.set_item("V", r.visibility)?;
    d.set_item("sum", r.sum)?;
    d.set_item("residual", r.residual)?;
    d.set_item("experiment", r.experiment.to_string())?;
    d.set_item("std_error", r.std_error)?;
    d.set_item("holds", r.holds())?;
    Ok(d)
}

fn settings(cfg: Option<&PyWavepackets>, eta: i32, events: usize, seed: u64) -> PyResult<DualitySettings> {
    Ok(DualitySettings {
        wavepackets: cfg.map_or_else(WavepacketConfig::far_field, |c| c.0),
        sign: sign(eta)?,
        events,
        seed,
        ..DualitySettings::default()
    })
}

/// `D`, `V` and `D + V` for one pair of states. `experiment` is one of
/// "hom", "hbt-analytic" or "hbt-sampled".
#[pyfunction]
#[pyo3(signature = (d_a, d_b, experiment="hom", cfg=None, eta=1, events=100_000, seed=0))]
#[allow(clippy::too_many_arguments)]
fn duality_check<'py>(
    py: Python<'py>,
    d_a: &PyState,
    d_b: &PyState,
    experiment: &str,
    cfg: Option<&PyWavepackets>,
    eta: i32,
    events: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let exp = self::experiment(experiment)?;
    let settings = settings(cfg, eta, events, seed)?;
    let r = duality::duality_check(&d_a.0, &d_b.0, exp, &settings).map_err(to_py)?;
    record_dict(py, &r)
}

/// Sweep over `n_points` overlap moduli in `[0, 1]`.
#[pyfunction]
#[pyo3(signature = (n_points, experiment="hom", cfg=None, eta=1, events=100_000, seed=0))]
fn duality_sweep<'py>(
    py: Python<'py>,
    n_points: usize,
    experiment: &str,
    cfg: Option<&PyWavepackets>,
    eta: i32,
    events: usize,
    seed: u64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let exp = self::experiment(experiment)?;
    let settings = settings(cfg, eta, events, seed)?;
    let records = py
        .detach(|| duality::duality_sweep(n_points, exp, &settings))
        .map_err(to_py)?;
    records.iter().map(|r| record_dict(py, r)).collect()
}

#[pymodule]
fn twofold(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyState>()?;
    m.add_class::<PyWavepackets>()?;
    m.add_function(wrap_pyfunction!(make_state, m)?)?;
    m.add_function(wrap_pyfunction!(overlap, m)?)?;
    m.add_function(wrap_pyfunction!(distinguishability, m)?)?;
    m.add_function(wrap_pyfunction!(distinguishability_uqsd, m)?)?;
    m.add_function(wrap_pyfunction!(coincidence_probability, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_coincidence, m)?)?;
    m.add_function(wrap_pyfunction!(bunching_probability, m)?)?;
    m.add_function(wrap_pyfunction!(hom_visibility, m)?)?;
    m.add_function(wrap_pyfunction!(delay_scan, m)?)?;
    m.add_function(wrap_pyfunction!(eraser_joint_probability, m)?)?;
    m.add_function(wrap_pyfunction!(joint_density, m)?)?;
    m.add_function(wrap_pyfunction!(fringe_pattern, m)?)?;
    m.add_function(wrap_pyfunction!(eraser_pattern, m)?)?;
    m.add_function(wrap_pyfunction!(extract_visibility, m)?)?;
    m.add_function(wrap_pyfunction!(sample_hom, m)?)?;
    m.add_function(wrap_pyfunction!(sample_hbt, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_visibility, m)?)?;
    m.add_function(wrap_pyfunction!(duality_check, m)?)?;
    m.add_function(wrap_pyfunction!(duality_sweep, m)?)?;
    Ok(())
}

//! Python bindings for `coherent_cipher`.
//!
//! Encodings are passed as strings (`"phase"` or `"polarization"`), priors as
//! the probability `p0` of bit 0. Invalid arguments raise `ValueError`;
//! numerical failures raise `RuntimeError`.

use coherent_cipher::error::Error;
use coherent_cipher::fock_oracle::{self, DEFAULT_TAIL_TOL};
use coherent_cipher::helstrom::{self, EngineOptions, Priors, DEFAULT_RANK_TOL};
use coherent_cipher::keystream::{self, LfsrState, DEFAULT_SEED, DEFAULT_TAPS};
use coherent_cipher::protocol_sim;
use coherent_cipher::states::{self, EncodingKind, TwoModeState};
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidArgument(_)
        | Error::InvalidState(_)
        | Error::Unsupported(_)
        | Error::DimensionOverflow { .. } => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn encoding(name: &str) -> PyResult<EncodingKind> {
    name.parse().map_err(to_py)
}

fn priors(p0: f64) -> PyResult<Priors> {
    Priors::from_p0(p0).map_err(to_py)
}

fn lfsr(seed: u64, taps: Option<Vec<u32>>) -> PyResult<LfsrState> {
    let taps = taps.unwrap_or_else(|| DEFAULT_TAPS.to_vec());
    LfsrState::new(seed, &taps).map_err(to_py)
}

#[pyclass(name = "TwoModeState", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyTwoModeState {
    inner: TwoModeState,
}

#[pymethods]
impl PyTwoModeState {
    #[new]
    fn new(beta1: Complex64, beta2: Complex64) -> Self {
        Self {
            inner: TwoModeState::new(beta1, beta2),
        }
    }

    #[getter]
    fn beta1(&self) -> Complex64 {
        self.inner.beta1
    }

    #[getter]
    fn beta2(&self) -> Complex64 {
        self.inner.beta2
    }

    fn mean_photons(&self) -> f64 {
        self.inner.mean_photons()
    }

    fn __repr__(&self) -> String {
        format!(
            "TwoModeState(beta1={}, beta2={})",
            self.inner.beta1, self.inner.beta2
        )
    }
}

#[pyfunction]
fn phase_state(theta: f64, nbar: f64) -> PyResult<PyTwoModeState> {
    let inner = states::phase_state(theta, nbar).map_err(to_py)?;
    Ok(PyTwoModeState { inner })
}

#[pyfunction]
fn polarization_state(theta: f64, nbar: f64) -> PyResult<PyTwoModeState> {
    let inner = states::polarization_state(theta, nbar).map_err(to_py)?;
    Ok(PyTwoModeState { inner })
}

#[pyfunction]
fn inner_product(s: &PyTwoModeState, t: &PyTwoModeState) -> PyResult<Complex64> {
    states::inner_product(&s.inner, &t.inner).map_err(to_py)
}

#[pyfunction]
fn overlap_angle(dtheta: f64, nbar: f64) -> PyResult<f64> {
    states::overlap_angle(dtheta, nbar).map_err(to_py)
}

#[pyclass(name = "DiscriminationResult", frozen, skip_from_py_object, get_all)]
#[derive(Clone)]
struct PyDiscriminationResult {
    pe: f64,
    trace_norm: f64,
    rank: usize,
    spectrum: Vec<f64>,
}

impl From<helstrom::DiscriminationResult> for PyDiscriminationResult {
    fn from(r: helstrom::DiscriminationResult) -> Self {
        Self {
            pe: r.pe,
            trace_norm: r.trace_norm,
            rank: r.rank,
            spectrum: r.spectrum,
        }
    }
}

#[pymethods]
impl PyDiscriminationResult {
    fn __repr__(&self) -> String {
        format!(
            "DiscriminationResult(pe={}, trace_norm={}, rank={})",
            self.pe, self.trace_norm, self.rank
        )
    }
}

#[pyclass(name = "ConstellationPoint", frozen, skip_from_py_object, get_all)]
#[derive(Clone)]
struct PyConstellationPoint {
    index: usize,
    theta: f64,
    key: usize,
    bit: u8,
    weight: f64,
}

#[pyfunction]
#[pyo3(signature = (m, nbar, encoding = "phase"))]
fn constellation(m: usize, nbar: f64, encoding: &str) -> PyResult<Vec<PyConstellationPoint>> {
    let c = helstrom::constellation(m, nbar, self::encoding(encoding)?).map_err(to_py)?;
    Ok(c.points
        .iter()
        .map(|p| PyConstellationPoint {
            index: p.index,
            theta: p.theta,
            key: p.key,
            bit: p.bit,
            weight: p.weight,
        })
        .collect())
}

#[pyfunction]
#[pyo3(signature = (m, nbar, encoding = "phase", p0 = 0.5, rank_tol = DEFAULT_RANK_TOL))]
fn eve_error(
    py: Python<'_>,
    m: usize,
    nbar: f64,
    encoding: &str,
    p0: f64,
    rank_tol: f64,
) -> PyResult<PyDiscriminationResult> {
    let enc = self::encoding(encoding)?;
    let pr = priors(p0)?;
    let opts = EngineOptions {
        rank_tol,
        ..EngineOptions::default()
    };
    py.detach(|| helstrom::eve_error_with(m, nbar, enc, pr, &opts))
        .map(Into::into)
        .map_err(to_py)
}

#[pyfunction]
fn bob_error(nbar: f64) -> PyResult<f64> {
    helstrom::bob_error(nbar).map_err(to_py)
}

#[pyclass(name = "CurveRow", frozen, skip_from_py_object, get_all)]
#[derive(Clone)]
struct PyCurveRow {
    m: usize,
    nbar: f64,
    pe_eve: f64,
    pe_bob: f64,
    rank: usize,
}

#[pyfunction]
#[pyo3(signature = (m_values, nbar_values, encoding = "phase", p0 = 0.5))]
fn pe_curve(
    py: Python<'_>,
    m_values: Vec<usize>,
    nbar_values: Vec<f64>,
    encoding: &str,
    p0: f64,
) -> PyResult<Vec<PyCurveRow>> {
    let enc = self::encoding(encoding)?;
    let pr = priors(p0)?;
    let rows = py
        .detach(|| helstrom::pe_curve(&m_values, &nbar_values, enc, pr))
        .map_err(to_py)?;
    Ok(rows
        .into_iter()
        .map(|r| PyCurveRow {
            m: r.m,
            nbar: r.nbar,
            pe_eve: r.pe_eve,
            pe_bob: r.pe_bob,
            rank: r.rank,
        })
        .collect())
}

#[pyclass(name = "OracleResult", frozen, skip_from_py_object, get_all)]
#[derive(Clone)]
struct PyOracleResult {
    result: PyDiscriminationResult,
    cutoff: usize,
    dimension: usize,
    truncation_bound: f64,
}

#[pyfunction]
#[pyo3(signature = (m, nbar, encoding = "phase", p0 = 0.5, tail_tol = DEFAULT_TAIL_TOL))]
fn oracle_min_error(
    py: Python<'_>,
    m: usize,
    nbar: f64,
    encoding: &str,
    p0: f64,
    tail_tol: f64,
) -> PyResult<PyOracleResult> {
    let enc = self::encoding(encoding)?;
    let pr = priors(p0)?;
    let r = py
        .detach(|| fock_oracle::oracle_min_error(m, nbar, enc, pr, tail_tol))
        .map_err(to_py)?;
    Ok(PyOracleResult {
        result: r.result.into(),
        cutoff: r.cutoff,
        dimension: r.dimension,
        truncation_bound: r.truncation_bound,
    })
}

/// Running key over `[0, m)`; iterating yields key indices forever.
#[pyclass(name = "KeyStream")]
struct PyKeyStream {
    inner: keystream::KeyStream,
}

#[pymethods]
impl PyKeyStream {
    #[new]
    #[pyo3(signature = (m, seed = DEFAULT_SEED, taps = None))]
    fn new(m: usize, seed: u64, taps: Option<Vec<u32>>) -> PyResult<Self> {
        let inner = keystream::KeyStream::new(lfsr(seed, taps)?, m).map_err(to_py)?;
        Ok(Self { inner })
    }

    fn next_index(&mut self) -> usize {
        self.inner.next_index()
    }

    fn take(&mut self, count: usize) -> Vec<usize> {
        (0..count).map(|_| self.inner.next_index()).collect()
    }

    fn __iter__(slf: PyRef<'_, Self>) -> PyRef<'_, Self> {
        slf
    }

    fn __next__(mut slf: PyRefMut<'_, Self>) -> usize {
        slf.inner.next_index()
    }
}

#[pyfunction]
#[pyo3(signature = (k, bit, m))]
fn total_angle(k: usize, bit: u8, m: usize) -> PyResult<f64> {
    keystream::total_angle(k, bit, m).map_err(to_py)
}

#[pyclass(name = "SimConfig", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySimConfig {
    inner: protocol_sim::SimConfig,
}

#[pymethods]
impl PySimConfig {
    #[new]
    #[pyo3(signature = (m, nbar, bits, seed = 0, encoding = "phase", loss_db = 0.0, lfsr_seed = DEFAULT_SEED, taps = None))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        m: usize,
        nbar: f64,
        bits: usize,
        seed: u64,
        encoding: &str,
        loss_db: f64,
        lfsr_seed: u64,
        taps: Option<Vec<u32>>,
    ) -> PyResult<Self> {
        let inner = protocol_sim::SimConfig {
            m,
            nbar,
            encoding: self::encoding(encoding)?,
            bits,
            loss_db,
            seed,
            lfsr: lfsr(lfsr_seed, taps)?,
        };
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    fn __repr__(&self) -> String {
        let c = &self.inner;
        format!(
            "SimConfig(m={}, nbar={}, bits={}, seed={}, encoding='{}', loss_db={})",
            c.m, c.nbar, c.bits, c.seed, c.encoding, c.loss_db
        )
    }
}

#[pyclass(name = "SimReport", frozen)]
struct PySimReport {
    inner: protocol_sim::SimReport,
}

#[pymethods]
impl PySimReport {
    #[getter]
    fn bob_errors(&self) -> u64 {
        self.inner.bob_errors
    }
    #[getter]
    fn eve_errors(&self) -> u64 {
        self.inner.eve_errors
    }
    #[getter]
    fn bob_ber(&self) -> f64 {
        self.inner.bob_ber
    }
    #[getter]
    fn eve_ber(&self) -> f64 {
        self.inner.eve_ber
    }
    #[getter]
    fn bob_se(&self) -> f64 {
        self.inner.bob_se
    }
    #[getter]
    fn eve_se(&self) -> f64 {
        self.inner.eve_se
    }
    #[getter]
    fn analytic_pe_bob(&self) -> f64 {
        self.inner.analytic_pe_bob
    }
    #[getter]
    fn analytic_pe_eve_helstrom(&self) -> f64 {
        self.inner.analytic_pe_eve_helstrom
    }
    #[getter]
    fn rng(&self) -> &'static str {
        self.inner.rng
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn csv_header(&self) -> String {
        self.inner.csv_header()
    }

    fn csv_row(&self) -> String {
        self.inner.csv_row()
    }
}

#[pyfunction]
fn run_session(py: Python<'_>, config: &PySimConfig) -> PyResult<PySimReport> {
    let cfg = config.inner.clone();
    let inner = py
        .detach(|| protocol_sim::run_session(&cfg))
        .map_err(to_py)?;
    Ok(PySimReport { inner })
}

#[pymodule]
fn coherent_cipher_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTwoModeState>()?;
    m.add_class::<PyDiscriminationResult>()?;
    m.add_class::<PyConstellationPoint>()?;
    m.add_class::<PyCurveRow>()?;
    m.add_class::<PyOracleResult>()?;
    m.add_class::<PyKeyStream>()?;
    m.add_class::<PySimConfig>()?;
    m.add_class::<PySimReport>()?;
    m.add_function(wrap_pyfunction!(phase_state, m)?)?;
    m.add_function(wrap_pyfunction!(polarization_state, m)?)?;
    m.add_function(wrap_pyfunction!(inner_product, m)?)?;
    m.add_function(wrap_pyfunction!(overlap_angle, m)?)?;
    m.add_function(wrap_pyfunction!(constellation, m)?)?;
    m.add_function(wrap_pyfunction!(eve_error, m)?)?;
    m.add_function(wrap_pyfunction!(bob_error, m)?)?;
    m.add_function(wrap_pyfunction!(pe_curve, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_min_error, m)?)?;
    m.add_function(wrap_pyfunction!(total_angle, m)?)?;
    m.add_function(wrap_pyfunction!(run_session, m)?)?;
    Ok(())
}

//! Python bindings. Structured results cross the boundary as plain dicts and
//! lists (decoded from the same JSON the CLI writes).

use std::collections::BTreeMap;

use dcsim::experiments::{self, ExperimentKind, Semantics};
use dcsim::optics::{self, BinGrid, GeometrySpec};
use dcsim::semantics::{self, Divergence};
use dcsim::stats;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyTuple};
use serde::Serialize;

fn err(e: dcsim::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// Dict keyed by label tuples.
fn tuple_dict<'py, V, I>(py: Python<'py>, items: I) -> PyResult<Bound<'py, PyDict>>
where
    I: IntoIterator<Item = (Vec<String>, V)>,
    V: IntoPyObject<'py>,
{
    let d = PyDict::new(py);
    for (k, v) in items {
        d.set_item(PyTuple::new(py, k)?, v)?;
    }
    Ok(d)
}

fn parse_semantics(s: &str) -> PyResult<Semantics> {
    match s {
        "collapse" => Ok(Semantics::Collapse),
        "convivial" => Ok(Semantics::Convivial),
        other => Err(PyValueError::new_err(format!("unknown semantics `{other}`"))),
    }
}

#[pyclass(name = "Geometry", from_py_object)]
#[derive(Clone)]
struct PyGeometry {
    spec: GeometrySpec,
    inner: optics::Geometry,
}

#[pymethods]
impl PyGeometry {
    #[new]
    #[pyo3(signature = (bins = 32, periods = 4, wavenumber = None, slit_separation = None, screen_distance = None, quadrature = false))]
    fn new(
        bins: usize,
        periods: usize,
        wavenumber: Option<f64>,
        slit_separation: Option<f64>,
        screen_distance: Option<f64>,
        quadrature: bool,
    ) -> PyResult<Self> {
        let d = GeometrySpec::default();
        let spec = GeometrySpec {
            wavenumber: wavenumber.unwrap_or(d.wavenumber),
            slit_separation: slit_separation.unwrap_or(d.slit_separation),
            screen_distance: screen_distance.unwrap_or(d.screen_distance),
            bins,
            periods,
            grid: if quadrature { BinGrid::Quadrature } else { BinGrid::Uniform },
            kernel: d.kernel,
        };
        let inner = optics::Geometry::from_spec(&spec).map_err(err)?;
        Ok(Self { spec, inner })
    }

    #[getter]
    fn bins(&self) -> usize {
        self.inner.bins()
    }

    fn sin_theta(&self) -> Vec<f64> {
        self.inner.sin_theta().to_vec()
    }

    /// `kd·sinθ` per bin.
    fn bin_phases(&self) -> Vec<f64> {
        self.inner.bin_phases()
    }
}

#[pyclass(name = "ExperimentConfig", from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: experiments::ExperimentConfig,
}

#[pymethods]
impl PyConfig {
    #[staticmethod]
    #[pyo3(signature = (screen = true))]
    fn double_slit(screen: bool) -> Self {
        Self { inner: experiments::ExperimentConfig::double_slit(screen) }
    }

    #[staticmethod]
    #[pyo3(signature = (closed = true))]
    fn mach_zehnder(closed: bool) -> Self {
        Self { inner: experiments::ExperimentConfig::mach_zehnder(closed) }
    }

    #[staticmethod]
    fn epr() -> Self {
        Self { inner: experiments::ExperimentConfig::epr() }
    }

    #[staticmethod]
    #[pyo3(signature = (eraser_in = true))]
    fn eraser(eraser_in: bool) -> Self {
        Self { inner: experiments::ExperimentConfig::eraser(eraser_in) }
    }

    #[getter]
    fn kind(&self) -> String {
        self.inner.kind().to_string()
    }

    #[getter]
    fn shots(&self) -> usize {
        self.inner.shots
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    fn with_shots(&self, n: usize) -> Self {
        Self { inner: self.inner.clone().with_shots(n) }
    }

    fn with_seed(&self, seed: u64) -> Self {
        Self { inner: self.inner.clone().with_seed(seed) }
    }

    fn with_pairs(&self, n: usize) -> Self {
        Self { inner: self.inner.clone().with_pairs(n) }
    }

    fn with_semantics(&self, semantics: &str) -> PyResult<Self> {
        Ok(Self { inner: self.inner.clone().with_semantics(parse_semantics(semantics)?) })
    }

    fn with_geometry(&self, geometry: &PyGeometry) -> Self {
        Self { inner: self.inner.clone().with_geometry(geometry.spec.clone()) }
    }

    fn with_choice_time(&self, t: u64) -> PyResult<Self> {
        Ok(Self { inner: self.inner.clone().with_choice_time(t).map_err(err)? })
    }

    fn legal_choice_times(&self) -> PyResult<Vec<u64>> {
        self.inner.legal_choice_times().map_err(err)
    }

    fn geometry(&self) -> PyResult<PyGeometry> {
        let inner = optics::Geometry::from_spec(&self.inner.geometry).map_err(err)?;
        Ok(PyGeometry { spec: self.inner.geometry.clone(), inner })
    }

    fn to_dict(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.inner)
    }

    fn __repr__(&self) -> String {
        format!("ExperimentConfig(kind={}, shots={}, seed={})", self.inner.kind(), self.inner.shots, self.inner.seed)
    }
}

fn schedule(cfg: &PyConfig) -> PyResult<experiments::ScheduledExperiment> {
    experiments::build(&cfg.inner).map_err(err)
}

/// Final pre-measurement state as `[(labels, re, im)]`.
#[pyfunction]
fn final_state(cfg: &PyConfig) -> PyResult<Vec<(Vec<String>, f64, f64)>> {
    let s = schedule(cfg)?.final_state().map_err(err)?;
    Ok(s.terms().map(|(l, a)| (l, a.re, a.im)).collect())
}

/// Names of the measured subsystems, in event order.
#[pyfunction]
fn event_subsystems(cfg: &PyConfig) -> PyResult<Vec<String>> {
    Ok(schedule(cfg)?.events.iter().map(|e| e.subsystem.clone()).collect())
}

/// Born probabilities of the final state over `subsystems`, keyed by label tuple.
#[pyfunction]
fn born<'py>(py: Python<'py>, cfg: &PyConfig, subsystems: Vec<String>) -> PyResult<Bound<'py, PyDict>> {
    let t = schedule(cfg)?.final_product().map_err(err)?.born_distribution(&subsystems).map_err(err)?;
    tuple_dict(py, t.entries())
}

#[pyfunction]
fn exact_joint(py: Python<'_>, cfg: &PyConfig, a: &str, b: &str) -> PyResult<Py<PyAny>> {
    to_py(py, &stats::exact_joint(&schedule(cfg)?, a, b).map_err(err)?)
}

/// Dense exact marginal of one subsystem (alphabet order).
#[pyfunction]
fn exact_histogram(cfg: &PyConfig, subsystem: &str) -> PyResult<Vec<f64>> {
    Ok(stats::exact_histogram(&schedule(cfg)?, subsystem).map_err(err)?.values)
}

/// Exact D0 distribution conditioned on one idler detector.
#[pyfunction]
fn exact_conditional(cfg: &PyConfig, detector: &str) -> PyResult<Vec<f64>> {
    let sched = schedule(cfg)?;
    let (d0, det) = match sched.kind {
        ExperimentKind::QuantumEraser => (&sched.events[0].subsystem, &sched.events[1].subsystem),
        _ => return Err(PyValueError::new_err("conditional histograms need the eraser")),
    };
    let table = stats::exact_joint(&sched, d0, det).map_err(err)?;
    Ok(stats::exact_conditional_histogram(&table, detector).map_err(err)?.values)
}

#[pyclass(name = "RecordSet", from_py_object)]
#[derive(Clone)]
struct PyRecordSet {
    inner: stats::RecordSet,
}

#[pymethods]
impl PyRecordSet {
    #[getter]
    fn shots(&self) -> usize {
        self.inner.shots
    }

    fn __len__(&self) -> usize {
        self.inner.records.len()
    }

    /// One dict per pair: `{"shot", "pair", "outcomes": {channel: label}}`.
    fn records(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.inner.records)
    }

    fn channel_counts(&self, channel: &str) -> PyResult<BTreeMap<String, usize>> {
        Ok(self.inner.channel_counts(channel).map_err(err)?.into_iter().collect())
    }

    fn coincidence_histogram(&self, detector: &str) -> PyResult<Vec<f64>> {
        Ok(stats::coincidence_histogram(&self.inner, detector).map_err(err)?.values)
    }

    /// Whole-shot outcome tuples and their counts.
    fn outcome_counts<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        tuple_dict(py, self.inner.outcome_counts())
    }
}

#[pyfunction]
fn run_trials(py: Python<'_>, cfg: &PyConfig) -> PyResult<PyRecordSet> {
    let cfg = cfg.inner.clone();
    let inner = py.detach(move || stats::run_trials(&cfg)).map_err(err)?;
    Ok(PyRecordSet { inner })
}

/// `{visibility, phase, baseline, residual}` for a histogram on `geometry`'s bins.
#[pyfunction]
fn fringe_fit(py: Python<'_>, values: Vec<f64>, geometry: &PyGeometry) -> PyResult<Py<PyAny>> {
    to_py(py, &stats::fringe_fit(&values, &geometry.inner).map_err(err)?)
}

/// Largest difference between the two measurement orders over all event pairs.
#[pyfunction]
fn check_order_independence(cfg: &PyConfig) -> PyResult<f64> {
    let sched = schedule(cfg)?;
    let mut worst: Option<f64> = None;
    for (i, a) in sched.events.iter().enumerate() {
        for b in &sched.events[i + 1..] {
            if a.subsystem != b.subsystem {
                let v = stats::check_order_independence(&sched, a, b).map_err(err)?;
                worst = Some(worst.map_or(v, |w| w.max(v)));
            }
        }
    }
    worst.ok_or_else(|| PyValueError::new_err("not-applicable: fewer than two measured subsystems"))
}

#[pyfunction]
#[pyo3(signature = (cfg, times = None))]
fn check_delayed_invariance(cfg: &PyConfig, times: Option<Vec<u64>>) -> PyResult<f64> {
    let times = match times {
        Some(t) => t,
        None => cfg.inner.legal_choice_times().map_err(err)?,
    };
    stats::check_delayed_invariance(&cfg.inner, &times).map_err(err)
}

/// Flatness of the eraser's detector-summed D0 marginal.
#[pyfunction]
fn check_marginal_flatness(cfg: &PyConfig) -> PyResult<f64> {
    let sched = schedule(cfg)?;
    if sched.kind != ExperimentKind::QuantumEraser {
        return Err(PyValueError::new_err("not-applicable: flatness is defined for the eraser"));
    }
    let table = stats::exact_joint(&sched, &sched.events[0].subsystem, &sched.events[1].subsystem).map_err(err)?;
    Ok(stats::check_marginal_flatness(&table))
}

#[pyfunction]
#[pyo3(signature = (runs, seed = 0, pairs = 1))]
fn no_conflict(py: Python<'_>, runs: usize, seed: u64, pairs: usize) -> PyResult<Py<PyAny>> {
    let r = py.detach(move || stats::no_conflict_runs(runs, seed, pairs)).map_err(err)?;
    to_py(py, &r)
}

#[pyfunction]
fn semantics_agreement(py: Python<'_>, cfg: &PyConfig, shots: usize) -> PyResult<Py<PyAny>> {
    let c = cfg.inner.clone();
    let r = py.detach(move || stats::semantics_agreement(&c, shots)).map_err(err)?;
    to_py(py, &r)
}

/// Exact distribution of the event outcome tuple under one semantics.
#[pyfunction]
#[pyo3(signature = (cfg, semantics = "collapse"))]
fn exact_events<'py>(py: Python<'py>, cfg: &PyConfig, semantics: &str) -> PyResult<Bound<'py, PyDict>> {
    let sched = schedule(cfg)?;
    let global = sched.final_product().map_err(err)?;
    let dist = semantics::exact_event_distribution(&global, &sched.events, parse_semantics(semantics)?).map_err(err)?;
    tuple_dict(py, dist)
}

/// A measurement engine over one experiment's final state.
#[pyclass(name = "Engine")]
struct PyEngine {
    inner: semantics::EngineState,
    events: Vec<experiments::MeasurementEvent>,
}

#[pymethods]
impl PyEngine {
    #[new]
    #[pyo3(signature = (cfg, semantics = "convivial", seed = 0, stream = 0))]
    fn new(cfg: &PyConfig, semantics: &str, seed: u64, stream: u64) -> PyResult<Self> {
        let sched = schedule(cfg)?;
        let global = sched.final_product().map_err(err)?;
        let inner = semantics::EngineState::seeded(parse_semantics(semantics)?, global, seed, stream).map_err(err)?;
        Ok(Self { inner, events: sched.events })
    }

    /// Runs every scheduled event; returns the outcomes in order.
    fn run_events(&mut self) -> PyResult<Vec<String>> {
        let events = self.events.clone();
        events.iter().map(|e| self.inner.measure(e).map_err(err)).collect()
    }

    fn measure(&mut self, observer: &str, subsystem: &str) -> PyResult<String> {
        self.inner.measure_subsystem(observer, subsystem).map_err(err)
    }

    fn communicate(&mut self, asker: &str, askee: &str, about: &str) -> PyResult<String> {
        self.inner.communicate(asker, askee, about).map_err(err)
    }

    /// `"same"`, `"different"` or `"incomparable"`.
    fn divergence(&self, a: &str, b: &str) -> PyResult<&'static str> {
        Ok(match self.inner.branch_divergence(a, b).map_err(err)? {
            Divergence::Same => "same",
            Divergence::Different => "different",
            Divergence::Incomparable => "incomparable",
        })
    }

    fn record(&self, py: Python<'_>, observer: &str) -> PyResult<Py<PyAny>> {
        to_py(py, &self.inner.observer_record(observer).map_err(err)?)
    }

    fn branch_trace(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.inner.branch_trace())
    }
}

#[pymodule]
fn pydcsim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGeometry>()?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PyRecordSet>()?;
    m.add_class::<PyEngine>()?;
    m.add_function(wrap_pyfunction!(final_state, m)?)?;
    m.add_function(wrap_pyfunction!(event_subsystems, m)?)?;
    m.add_function(wrap_pyfunction!(born, m)?)?;
    m.add_function(wrap_pyfunction!(exact_joint, m)?)?;
    m.add_function(wrap_pyfunction!(exact_histogram, m)?)?;
    m.add_function(wrap_pyfunction!(exact_conditional, m)?)?;
    m.add_function(wrap_pyfunction!(exact_events, m)?)?;
    m.add_function(wrap_pyfunction!(run_trials, m)?)?;
    m.add_function(wrap_pyfunction!(fringe_fit, m)?)?;
    m.add_function(wrap_pyfunction!(check_order_independence, m)?)?;
    m.add_function(wrap_pyfunction!(check_delayed_invariance, m)?)?;
    m.add_function(wrap_pyfunction!(check_marginal_flatness, m)?)?;
    m.add_function(wrap_pyfunction!(no_conflict, m)?)?;
    m.add_function(wrap_pyfunction!(semantics_agreement, m)?)?;
    Ok(())
}

//! Python bindings. Heavy results (reports, events) cross the boundary as
//! JSON and are decoded into plain dicts and lists on the Python side.

use pyo3::exceptions::{PyKeyError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyAny;

use dexflat::acceptance::run_criterion as run_ac;
use dexflat::builtins::Builtin;
use dexflat::classification::{classify as classify_core, ClassificationConfig};
use dexflat::linearization::Tolerances;
use dexflat::negotiation::{export_dot, negotiability_graph as graph_core, FamilyConfig, NegotiabilityGraph};
use dexflat::simulator::{
    builtin_scenario, parse_scenario, render_scenario, run_scenario, transient_metric, Scenario as CoreScenario, SimulationTrace,
    BUILTIN_SCENARIOS as SCENARIO_TEXTS,
};
use dexflat::system::{parse_system, render_system, OutputMap, ProlongationPattern, SystemDefinition};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn from_json<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (v.to_string(),))
}

/// An input-affine system.
#[pyclass(frozen)]
struct System {
    inner: SystemDefinition,
    builtin: Option<Builtin>,
}

impl System {
    fn output(&self, name: Option<&str>) -> PyResult<OutputMap> {
        match name {
            Some(n) => self
                .inner
                .output(n)
                .cloned()
                .ok_or_else(|| PyKeyError::new_err(format!("no output `{n}`"))),
            None => self
                .inner
                .default_output()
                .cloned()
                .ok_or_else(|| value_err("system declares no output")),
        }
    }
}

#[pymethods]
impl System {
    #[staticmethod]
    fn builtin(id: &str) -> PyResult<Self> {
        let b: Builtin = id.parse().map_err(PyKeyError::new_err)?;
        Ok(System {
            inner: b.system(),
            builtin: Some(b),
        })
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(System {
            inner: parse_system(text).map_err(value_err)?,
            builtin: None,
        })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn states(&self) -> Vec<String> {
        self.inner.states.clone()
    }

    #[getter]
    fn inputs(&self) -> Vec<String> {
        self.inner.inputs.clone()
    }

    #[getter]
    fn outputs(&self) -> Vec<String> {
        self.inner.outputs.iter().map(|o| o.name.clone()).collect()
    }

    fn render(&self) -> String {
        render_system(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("System({}, n={}, p={})", self.inner.name, self.inner.n(), self.inner.p())
    }
}

fn tolerances(seed: Option<u64>, tol_rank: Option<f64>) -> Tolerances {
    let mut t = seed.map(Tolerances::with_seed).unwrap_or_default();
    if let Some(r) = tol_rank {
        t.tol_rank = r;
    }
    t
}

/// Classify every input; returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (system, output=None, a_max=None, l_max=3, seed=None, tol_rank=None))]
fn classify<'py>(
    py: Python<'py>,
    system: &System,
    output: Option<&str>,
    a_max: Option<usize>,
    l_max: usize,
    seed: Option<u64>,
    tol_rank: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let y = system.output(output)?;
    let cfg = ClassificationConfig {
        a_max,
        l_max,
        tol: tolerances(seed, tol_rank),
        ..Default::default()
    };
    let rep = py.detach(|| classify_core(&system.inner, &y, &cfg)).map_err(value_err)?;
    from_json(py, &rep.to_json())
}

/// Negotiability graph of one prolongation.
#[pyclass(frozen)]
struct Graph {
    inner: NegotiabilityGraph,
}

#[pymethods]
impl Graph {
    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.vertices.iter().map(|v| v.label.clone()).collect()
    }

    /// `(A, O)` of each vertex, one-based.
    #[getter]
    fn pairs(&self) -> Vec<(Vec<usize>, Vec<usize>)> {
        self.inner.vertices.iter().map(|v| (v.a.one_based(), v.o.one_based())).collect()
    }

    #[getter]
    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges.iter().map(|e| (e.a, e.b)).collect()
    }

    /// Vertices in the component of the full task.
    #[getter]
    fn starred(&self) -> Vec<usize> {
        self.inner.starred.clone()
    }

    fn neighbours(&self, i: usize) -> Vec<usize> {
        self.inner.neighbours(i)
    }

    fn dot(&self) -> String {
        export_dot(&self.inner)
    }

    fn summary(&self) -> String {
        self.inner.summary()
    }

    fn __len__(&self) -> usize {
        self.inner.vertices.len()
    }
}

#[pyfunction]
#[pyo3(signature = (system, ell, output=None, a_max=None, seed=None))]
fn negotiability_graph(
    py: Python<'_>,
    system: &System,
    ell: &str,
    output: Option<&str>,
    a_max: Option<usize>,
    seed: Option<u64>,
) -> PyResult<Graph> {
    let y = system.output(output)?;
    let pattern: ProlongationPattern = ell.parse().map_err(value_err)?;
    let cfg = FamilyConfig {
        classification: ClassificationConfig {
            a_max,
            tol: tolerances(seed, None),
            ..Default::default()
        },
    };
    let labels = system.builtin.map(Builtin::labels).unwrap_or_default();
    let inner = py
        .detach(|| graph_core(&system.inner, &y, &pattern, &cfg, &labels))
        .map_err(value_err)?;
    Ok(Graph { inner })
}

/// A closed-loop scenario description.
#[pyclass(frozen)]
struct Scenario {
    inner: CoreScenario,
}

#[pymethods]
impl Scenario {
    #[staticmethod]
    fn builtin(id: &str) -> PyResult<Self> {
        let inner = builtin_scenario(id).ok_or_else(|| PyKeyError::new_err(format!("unknown scenario `{id}`")))?;
        Ok(Scenario { inner })
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(Scenario {
            inner: parse_scenario(text).map_err(value_err)?,
        })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    fn render(&self) -> String {
        render_scenario(&self.inner)
    }
}

/// Sampled closed-loop run.
#[pyclass(frozen)]
struct Trace {
    inner: SimulationTrace,
}

#[pymethods]
impl Trace {
    #[getter]
    fn t(&self) -> Vec<f64> {
        self.inner.t.clone()
    }

    #[getter]
    fn state_names(&self) -> Vec<String> {
        self.inner.state_names.clone()
    }

    #[getter]
    fn x(&self) -> Vec<Vec<f64>> {
        self.inner.x.clone()
    }

    #[getter]
    fn input_names(&self) -> Vec<String> {
        self.inner.input_names.clone()
    }

    #[getter]
    fn u(&self) -> Vec<Vec<f64>> {
        self.inner.u.clone()
    }

    #[getter]
    fn channels(&self) -> Vec<String> {
        self.inner.channel_names.clone()
    }

    #[getter]
    fn vertex(&self) -> Vec<String> {
        self.inner.vertex.clone()
    }

    #[getter]
    fn aborted(&self) -> Option<String> {
        self.inner.aborted.clone()
    }

    #[getter]
    fn switch_times(&self) -> Vec<f64> {
        self.inner.switch_times()
    }

    /// Switch, hand-over, rejection and abort events as dicts.
    fn events<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        from_json(py, &serde_json::to_value(&self.inner.events).map_err(value_err)?)
    }

    fn error(&self, channel: &str) -> PyResult<Vec<f64>> {
        self.inner
            .error_series(channel)
            .ok_or_else(|| PyKeyError::new_err(channel.to_string()))
    }

    fn input(&self, name: &str) -> PyResult<Vec<f64>> {
        self.inner.input_series(name).ok_or_else(|| PyKeyError::new_err(name.to_string()))
    }

    /// Deviation of `channel` from its pre-switch error dynamics.
    #[pyo3(signature = (channel, t_switch, window=2.0))]
    fn transient_metric(&self, channel: &str, t_switch: f64, window: f64) -> PyResult<f64> {
        Ok(transient_metric(&self.inner, channel, t_switch, window).map_err(value_err)?.value)
    }

    fn csv(&self) -> String {
        self.inner.to_csv()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

#[pyfunction]
fn simulate(py: Python<'_>, scenario: &Scenario) -> PyResult<Trace> {
    let inner = py.detach(|| run_scenario(&scenario.inner)).map_err(value_err)?;
    Ok(Trace { inner })
}

/// Runs one acceptance criterion; returns `(passed, report line)`.
#[pyfunction]
fn run_criterion(py: Python<'_>, id: &str) -> PyResult<(bool, String)> {
    let r = py.detach(|| run_ac(id)).ok_or_else(|| PyKeyError::new_err(id.to_string()))?;
    Ok((r.passed(), r.to_string()))
}

#[pymodule]
fn _native(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<System>()?;
    m.add_class::<Graph>()?;
    m.add_class::<Scenario>()?;
    m.add_class::<Trace>()?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(negotiability_graph, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(run_criterion, m)?)?;
    m.add("BUILTIN_SYSTEMS", Builtin::ALL.iter().map(|b| b.id()).collect::<Vec<_>>())?;
    m.add("BUILTIN_SCENARIOS", SCENARIO_TEXTS.iter().map(|(id, _)| *id).collect::<Vec<_>>())?;
    Ok(())
}

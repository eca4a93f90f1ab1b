//! Python module `obliv_relay`: channels, policies, rate regions, condition
//! checks and the Monte Carlo simulator. Reports come back as plain dicts
//! decoded from the same JSON the command-line tool writes.

use std::collections::BTreeMap;

use relay::sim::Typicality;
use relay::{Error, RegionKind};
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(obliv_relay, ValidationError, PyValueError, "Invalid channel, policy or parameter.");
create_exception!(obliv_relay, ResourceCapError, PyRuntimeError, "A size or memory cap was exceeded.");

fn to_py(e: Error) -> PyErr {
    if e.is_resource_cap() {
        ResourceCapError::new_err(e.to_string())
    } else {
        ValidationError::new_err(e.to_string())
    }
}

fn loads<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

#[pyclass(name = "Channel", module = "obliv_relay", frozen)]
struct PyChannel {
    inner: relay::Channel,
}

#[pymethods]
impl PyChannel {
    /// Built-in fixture by name with optional numeric parameters.
    #[staticmethod]
    #[pyo3(signature = (name, params = None))]
    fn fixture(name: &str, params: Option<BTreeMap<String, f64>>) -> PyResult<Self> {
        let inner = relay::builtin_channel(name, &params.unwrap_or_default()).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_json(document: &str) -> PyResult<Self> {
        Ok(Self { inner: relay::load_channel(document).map_err(to_py)? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn input_sizes(&self) -> Vec<usize> {
        self.inner.input_sizes().to_vec()
    }

    #[getter]
    fn output_sizes(&self) -> Vec<usize> {
        self.inner.output_sizes().to_vec()
    }

    #[getter]
    fn relay_size(&self) -> usize {
        self.inner.relay_size()
    }

    #[getter]
    fn link_capacities(&self) -> Vec<f64> {
        self.inner.link_capacities().to_vec()
    }

    /// Flattened kernel, inputs slowest and y_R fastest.
    #[getter]
    fn kernel(&self) -> Vec<f64> {
        self.inner.kernel().to_vec()
    }

    fn with_link_capacities(&self, caps: Vec<f64>) -> PyResult<Self> {
        Ok(Self { inner: self.inner.with_link_capacities(caps).map_err(to_py)? })
    }

    fn destination_view(&self, destination: usize) -> PyResult<Self> {
        Ok(Self { inner: self.inner.destination_view(destination).map_err(to_py)? })
    }

    fn __repr__(&self) -> String {
        format!(
            "Channel(M={}, K={}, inputs={:?}, outputs={:?}, relay={}, C={:?})",
            self.inner.m(),
            self.inner.k(),
            self.inner.input_sizes(),
            self.inner.output_sizes(),
            self.inner.relay_size(),
            self.inner.link_capacities()
        )
    }
}

#[pyclass(name = "Policy", module = "obliv_relay", frozen)]
struct PyPolicy {
    inner: relay::Policy,
}

#[pymethods]
impl PyPolicy {
    /// Flattened laws: p(x_i|q) is `input_dists[i][q*|X_i| + x]` and
    /// p(ŷ_k|y_R,q) is `compression_dists[k][(q*|Y_R| + y_R)*|Ŷ_k| + ŷ]`.
    #[new]
    fn new(
        q_dist: Vec<f64>,
        input_sizes: Vec<usize>,
        input_dists: Vec<Vec<f64>>,
        relay_size: usize,
        compression_sizes: Vec<usize>,
        compression_dists: Vec<Vec<f64>>,
    ) -> PyResult<Self> {
        let inner = relay::Policy::new(q_dist, input_sizes, input_dists, relay_size, compression_sizes, compression_dists)
            .map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Uniform inputs and compressions; |Ŷ_k| defaults to |Y_R|.
    #[staticmethod]
    #[pyo3(signature = (channel, q_size = 1, compression_sizes = None))]
    fn uniform(channel: &PyChannel, q_size: usize, compression_sizes: Option<Vec<usize>>) -> PyResult<Self> {
        let ch = &channel.inner;
        let sizes = compression_sizes.unwrap_or_else(|| vec![ch.relay_size(); ch.k()]);
        Ok(Self { inner: relay::uniform_policy(ch, q_size, &sizes).map_err(to_py)? })
    }

    #[staticmethod]
    fn from_json(document: &str) -> PyResult<Self> {
        Ok(Self { inner: relay::Policy::from_json(document).map_err(to_py)? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn q_dist(&self) -> Vec<f64> {
        self.inner.q_dist().to_vec()
    }

    #[getter]
    fn compression_sizes(&self) -> Vec<usize> {
        self.inner.compression_sizes().to_vec()
    }

    fn input_dist(&self, source: usize, q: usize) -> Vec<f64> {
        self.inner.input_dist(source, q).to_vec()
    }

    fn single_destination(&self, destination: usize) -> PyResult<Self> {
        Ok(Self { inner: self.inner.single_destination(destination).map_err(to_py)? })
    }
}

#[pyclass(name = "RateRegion", module = "obliv_relay", frozen)]
struct PyRateRegion {
    inner: relay::RateRegion,
}

#[pymethods]
impl PyRateRegion {
    #[getter]
    fn scheme(&self) -> &'static str {
        self.inner.scheme.as_str()
    }

    #[getter]
    fn topology(&self) -> &'static str {
        self.inner.topology
    }

    #[getter]
    fn label(&self) -> String {
        self.inner.label.clone()
    }

    #[getter]
    fn feasible(&self) -> bool {
        self.inner.feasible
    }

    #[getter]
    fn notes(&self) -> Vec<String> {
        self.inner.notes.clone()
    }

    /// `{class label: {bound name: bits}}`.
    fn bounds(&self) -> BTreeMap<String, BTreeMap<String, f64>> {
        self.inner
            .classes
            .iter()
            .map(|c| (c.label(self.inner.m), c.bounds.iter().map(|b| (b.name.clone(), b.value)).collect()))
            .collect()
    }

    /// `{class label: effective bound}`.
    fn effective(&self) -> BTreeMap<String, f64> {
        self.inner.classes.iter().map(|c| (c.label(self.inner.m), c.effective())).collect()
    }

    #[pyo3(signature = (rates, tol = 0.0))]
    fn contains(&self, rates: Vec<f64>, tol: f64) -> bool {
        self.inner.contains(&rates, tol)
    }

    /// Best λ·R over the region and a rate vector attaining it.
    fn max_weighted(&self, weights: Vec<f64>) -> PyResult<Option<(f64, Vec<f64>)>> {
        self.inner.max_weighted(&weights).map_err(to_py)
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    fn __repr__(&self) -> String {
        format!("RateRegion({}, {}, effective={:?})", self.inner.scheme.as_str(), self.inner.topology, self.effective())
    }
}

#[pyclass(name = "JointDistribution", module = "obliv_relay", frozen)]
struct PyJoint {
    inner: relay::JointDistribution,
}

#[pymethods]
impl PyJoint {
    /// Table over `names` with alphabet `sizes`, first variable slowest.
    #[new]
    fn new(names: Vec<String>, sizes: Vec<usize>, probs: Vec<f64>) -> PyResult<Self> {
        if names.len() != sizes.len() {
            return Err(ValidationError::new_err(format!("{} names for {} sizes", names.len(), sizes.len())));
        }
        let vars = names.into_iter().zip(sizes).collect();
        Ok(Self { inner: relay::JointDistribution::new(vars, probs).map_err(to_py)? })
    }

    #[getter]
    fn names(&self) -> Vec<String> {
        self.inner.names().into_iter().map(String::from).collect()
    }

    #[getter]
    fn probs(&self) -> Vec<f64> {
        self.inner.probs().to_vec()
    }

    fn marginalize(&self, keep: Vec<String>) -> PyResult<Self> {
        Ok(Self { inner: self.inner.marginalize(&keep).map_err(to_py)? })
    }

    fn entropy(&self, set: Vec<String>) -> PyResult<f64> {
        self.inner.entropy(&set).map_err(to_py)
    }

    fn mutual_info(&self, a: Vec<String>, b: Vec<String>) -> PyResult<f64> {
        self.inner.mutual_info(&a, &b).map_err(to_py)
    }

    #[pyo3(signature = (a, b, given = Vec::new()))]
    fn cond_mutual_info(&self, a: Vec<String>, b: Vec<String>, given: Vec<String>) -> PyResult<f64> {
        self.inner.cond_mutual_info(&a, &b, &given).map_err(to_py)
    }
}

/// Joint law of (Q, X, Y, Y_R, Ŷ) induced by a channel and a policy.
#[pyfunction]
fn build_joint(channel: &PyChannel, policy: &PyPolicy) -> PyResult<PyJoint> {
    Ok(PyJoint { inner: relay::build_joint(&channel.inner, &policy.inner).map_err(to_py)? })
}

/// Region of `kind`: pmarc, marc, pifrc, multicast (GCF), cf or nnc.
#[pyfunction]
#[pyo3(signature = (channel, policy, kind = "pmarc"))]
fn region(channel: &PyChannel, policy: &PyPolicy, kind: &str) -> PyResult<PyRateRegion> {
    let kind = RegionKind::parse(kind).map_err(to_py)?;
    Ok(PyRateRegion { inner: kind.evaluate(&channel.inner, &policy.inner).map_err(to_py)? })
}

/// `(verdict, witness class, difference)` comparing effective bounds.
#[pyfunction]
#[pyo3(signature = (a, b, tol = 1e-9))]
fn compare(a: &PyRateRegion, b: &PyRateRegion, tol: f64) -> PyResult<(&'static str, Option<String>, f64)> {
    let c = relay::region_compare(&a.inner, &b.inner, tol).map_err(to_py)?;
    Ok((c.verdict.as_str(), c.witness, c.difference))
}

/// Searches policies for the best λ·R; returns (value, point, policy, region).
#[pyfunction]
#[pyo3(signature = (channel, kind, weights, resolution = 4, samples = 0, seed = 0, q_size = 1, compression_sizes = None))]
#[allow(clippy::too_many_arguments)]
fn frontier_search(
    py: Python<'_>,
    channel: &PyChannel,
    kind: &str,
    weights: Vec<f64>,
    resolution: usize,
    samples: usize,
    seed: u64,
    q_size: usize,
    compression_sizes: Option<Vec<usize>>,
) -> PyResult<(f64, Vec<f64>, PyPolicy, PyRateRegion)> {
    let kind = RegionKind::parse(kind).map_err(to_py)?;
    let ch = &channel.inner;
    let config = relay::SearchConfig {
        grid: relay::GridSpec { resolution, samples, seed },
        weights,
        q_size,
        compression_sizes: compression_sizes.unwrap_or_else(|| vec![ch.relay_size(); ch.k()]),
    };
    let r = py.detach(|| relay::frontier_search(ch, kind, &config)).map_err(to_py)?;
    Ok((r.value, r.point, PyPolicy { inner: r.policy }, PyRateRegion { inner: r.region }))
}

#[pyfunction]
#[pyo3(signature = (channel, resolution = 16, samples = 0, seed = 0))]
fn strong_interference_dmc<'py>(
    py: Python<'py>,
    channel: &PyChannel,
    resolution: usize,
    samples: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let search = relay::GridSpec { resolution, samples, seed };
    let report = py.detach(|| relay::strong_interference_dmc(&channel.inner, &search)).map_err(to_py)?;
    loads(py, &report.to_json())
}

/// Closed-form check plus the Gaussian-input values of both conditions.
#[pyfunction]
#[pyo3(signature = (h11, h12, h21, h22, h1r, h2r, p1 = 1.0, p2 = 1.0))]
#[allow(clippy::too_many_arguments)]
fn strong_interference_gaussian<'py>(
    py: Python<'py>,
    h11: f64,
    h12: f64,
    h21: f64,
    h22: f64,
    h1r: f64,
    h2r: f64,
    p1: f64,
    p2: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let g = relay::GaussianIfrc { h11, h12, h21, h22, h1r, h2r, p1, p2 };
    let report = relay::strong_interference_gaussian(&g).map_err(to_py)?;
    let eq = relay::gaussian_equivalence_check(&g).map_err(to_py)?;
    let doc = loads(py, &report.to_json())?;
    let sides = PyDict::new(py);
    for (name, s) in [("condition1", eq.condition1), ("condition2", eq.condition2)] {
        let d = PyDict::new(py);
        d.set_item("lhs_scalar", s.lhs_scalar)?;
        d.set_item("lhs_vector", s.lhs_vector)?;
        d.set_item("rhs", s.rhs)?;
        d.set_item("agree", s.agree)?;
        sides.set_item(name, d)?;
    }
    doc.set_item("gaussian_inputs", sides)?;
    Ok(doc)
}

/// Monte Carlo GCF simulation; the topology follows the channel kind.
#[pyfunction]
#[pyo3(signature = (channel, policy, n, rates, rhat, epsilon = relay::sim::DEFAULT_EPSILON, trials = 1000, seed = 0, typicality = "joint"))]
#[allow(clippy::too_many_arguments)]
fn simulate<'py>(
    py: Python<'py>,
    channel: &PyChannel,
    policy: &PyPolicy,
    n: usize,
    rates: Vec<f64>,
    rhat: Vec<f64>,
    epsilon: f64,
    trials: u64,
    seed: u64,
    typicality: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let topology = if channel.inner.k() == 2 && channel.inner.mode() == relay::Mode::Unicast {
        relay::Topology::Pifrc
    } else {
        relay::Topology::Pmarc
    };
    let cfg = relay::SimConfig {
        epsilon,
        trials,
        seed,
        typicality: Typicality::parse(typicality).map_err(to_py)?,
        ..relay::SimConfig::new(topology, n, rates, rhat)
    };
    let report = py.detach(|| relay::simulate(&channel.inner, &policy.inner, &cfg)).map_err(to_py)?;
    loads(py, &report.to_json())
}

#[pyfunction]
#[pyo3(signature = (channel, policy, n = 2, samples = 100_000, seed = 0, rate = 1.0))]
fn verify_lemma1<'py>(
    py: Python<'py>,
    channel: &PyChannel,
    policy: &PyPolicy,
    n: usize,
    samples: u64,
    seed: u64,
    rate: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = relay::Lemma1Config { n, samples, seed, rate };
    let report = py.detach(|| relay::verify_lemma1(&channel.inner, &policy.inner, &cfg)).map_err(to_py)?;
    let doc = loads(py, &report.to_json())?;
    doc.set_item("max_tv", report.max_tv())?;
    Ok(doc)
}

#[pymodule(name = "obliv_relay")]
fn init(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("FIXTURES", relay::channel::FIXTURES.to_vec())?;
    m.add("ValidationError", m.py().get_type::<ValidationError>())?;
    m.add("ResourceCapError", m.py().get_type::<ResourceCapError>())?;
    m.add_class::<PyChannel>()?;
    m.add_class::<PyPolicy>()?;
    m.add_class::<PyRateRegion>()?;
    m.add_class::<PyJoint>()?;
    m.add_function(wrap_pyfunction!(build_joint, m)?)?;
    m.add_function(wrap_pyfunction!(region, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(frontier_search, m)?)?;
    m.add_function(wrap_pyfunction!(strong_interference_dmc, m)?)?;
    m.add_function(wrap_pyfunction!(strong_interference_gaussian, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(verify_lemma1, m)?)?;
    Ok(())
}

//! Python bindings for graphs, weights, polyvectors and the checks.

use formality::graphs::{self, AdmissibleGraph};
use formality::hochschild::{self, morphism_residual, morphism_weights, probe_outputs, PolyDiffOperator};
use formality::polyfields::{self, GradedSpaceSpec, Normalization, Polyvector};
use formality::scalar::{assess, format_rational, Sensitive};
use formality::weights::{self, Estimator, Sampling, WeightCache, WeightEstimate, WeightTable};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: formality::Error) -> PyErr {
    if e.is_io() {
        PyIOError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn estimator(name: &str) -> PyResult<Estimator> {
    match name {
        "degree" => Ok(Estimator::Degree),
        "chart" => Ok(Estimator::Chart),
        _ => Err(PyValueError::new_err(format!("unknown estimator {name:?}"))),
    }
}

fn cache(path: Option<&str>) -> PyResult<WeightCache> {
    match path {
        Some(p) => WeightCache::open(p).map_err(err),
        None => Ok(WeightCache::in_memory()),
    }
}

/// One-type admissible graph.
#[pyclass(name = "Graph", frozen)]
struct PyGraph {
    inner: AdmissibleGraph,
}

#[pymethods]
impl PyGraph {
    #[new]
    fn new(n: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        Ok(PyGraph { inner: AdmissibleGraph::new(n, edges).map_err(err)? })
    }

    #[staticmethod]
    fn parse(key: &str) -> PyResult<Self> {
        Ok(PyGraph { inner: AdmissibleGraph::parse(key).map_err(err)? })
    }

    #[staticmethod]
    fn ladder(upper: usize, lower: usize) -> Self {
        PyGraph { inner: AdmissibleGraph::ladder(upper, lower) }
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges().to_vec()
    }

    fn key(&self) -> String {
        self.inner.key()
    }

    fn is_connected(&self) -> bool {
        self.inner.is_connected()
    }

    fn labeling_count(&self) -> PyResult<u64> {
        graphs::count_labelings(self.inner.n(), self.inner.edges()).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Graph({:?})", self.inner.key())
    }
}

/// Polyvector field with rational coefficients.
#[pyclass(name = "Polyvector", frozen)]
struct PyPolyvector {
    inner: Polyvector,
}

#[pymethods]
impl PyPolyvector {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyPolyvector { inner: Polyvector::parse(text).map_err(err)? })
    }

    /// Random polyvector of one arity from a seeded stream.
    #[staticmethod]
    #[pyo3(signature = (dims, arity, max_degree=2, terms=2, seed=0))]
    fn random(dims: Vec<usize>, arity: usize, max_degree: u32, terms: usize, seed: u64) -> PyResult<Self> {
        let space = GradedSpaceSpec::new(dims).map_err(err)?;
        let inner = polyfields::random_tuple(&space, &[arity], max_degree, terms, seed).remove(0);
        Ok(PyPolyvector { inner })
    }

    fn to_json(&self) -> String {
        self.inner.to_json().to_string()
    }

    fn arity(&self) -> Option<usize> {
        self.inner.arity()
    }

    fn is_zero(&self) -> bool {
        self.inner.is_zero()
    }

    fn schouten(&self, other: &PyPolyvector) -> PyResult<PyPolyvector> {
        Ok(PyPolyvector { inner: polyfields::schouten(&self.inner, &other.inner).map_err(err)? })
    }

    fn hkr(&self) -> PyResult<PyOperator> {
        Ok(PyOperator { inner: hochschild::hkr(&self.inner).map_err(err)? })
    }

    fn __add__(&self, other: &PyPolyvector) -> PyResult<PyPolyvector> {
        Ok(PyPolyvector { inner: self.inner.add(&other.inner).map_err(err)? })
    }

    fn __eq__(&self, other: &PyPolyvector) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        polyfields::render(&self.inner)
    }
}

/// Polydifferential operator (Hochschild cochain) with rational coefficients.
#[pyclass(name = "Operator", frozen)]
struct PyOperator {
    inner: PolyDiffOperator,
}

#[pymethods]
impl PyOperator {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyOperator { inner: PolyDiffOperator::parse(text).map_err(err)? })
    }

    #[staticmethod]
    fn multiplication(dims: Vec<usize>) -> PyResult<Self> {
        Ok(PyOperator { inner: PolyDiffOperator::multiplication(&GradedSpaceSpec::new(dims).map_err(err)?) })
    }

    fn to_json(&self) -> String {
        self.inner.to_json().to_string()
    }

    #[getter]
    fn arity(&self) -> usize {
        self.inner.arity()
    }

    fn is_zero(&self) -> bool {
        self.inner.is_zero()
    }

    fn gerstenhaber(&self, other: &PyOperator) -> PyResult<PyOperator> {
        Ok(PyOperator { inner: hochschild::gerstenhaber(&self.inner, &other.inner).map_err(err)? })
    }

    fn differential(&self) -> PyResult<PyOperator> {
        Ok(PyOperator { inner: hochschild::hoch_differential(&self.inner).map_err(err)? })
    }

    fn __eq__(&self, other: &PyOperator) -> bool {
        self.inner == other.inner
    }
}

fn weight_dict<'py>(py: Python<'py>, w: &WeightEstimate) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("key", &w.key)?;
    d.set_item("method", w.method.token())?;
    d.set_item("value", w.value)?;
    d.set_item("exact", w.exact.as_ref().map(format_rational))?;
    d.set_item("stderr", w.stderr)?;
    d.set_item("samples", w.samples)?;
    d.set_item("seed", w.seed)?;
    Ok(d)
}

/// Canonical keys of all admissible graphs with `n` vertices and `edges` edges.
#[pyfunction]
#[pyo3(signature = (n, edges, connected=false))]
fn enumerate_graphs(n: usize, edges: usize, connected: bool) -> Vec<String> {
    graphs::enumerate_graphs(n, edges, connected).iter().map(AdmissibleGraph::key).collect()
}

/// Isomorphism classes as `(representative, labeling_count, labeled keys)`.
#[pyfunction]
#[pyo3(signature = (n, edges, connected=true))]
fn enumerate_shapes(n: usize, edges: usize, connected: bool) -> Vec<(String, u64, Vec<String>)> {
    graphs::enumerate_shapes(n, edges, connected)
        .into_iter()
        .map(|s| (s.representative.key(), s.labeling_count, s.labeled_graphs.iter().map(AdmissibleGraph::key).collect()))
        .collect()
}

/// Sampled weight of a one-type (`g:`) or two-type (`g2:`) key.
#[pyfunction]
#[pyo3(signature = (key, samples=200_000, seed=7, estimator="degree"))]
fn estimate_weight<'py>(py: Python<'py>, key: &str, samples: u64, seed: u64, estimator: &str) -> PyResult<Bound<'py, PyDict>> {
    let est = self::estimator(estimator)?;
    let w = py.detach(|| {
        if key.starts_with("g2:") {
            let g = graphs::TwoTypeGraph::parse(key)?;
            weights::estimate_weight_two_type(&g, samples, seed)
        } else {
            let g = AdmissibleGraph::parse(key)?;
            weights::estimate_weight_with(&g, samples, seed, est)
        }
    });
    weight_dict(py, &w.map_err(err)?)
}

/// Closed ladder formula as a fraction string.
#[pyfunction]
fn ladder_weight_exact(m: u32, n: u32) -> String {
    format_rational(&weights::ladder_weight_exact(m, n))
}

fn one_type_table(max_n: usize, sampling: Sampling, cache: &WeightCache) -> PyResult<WeightTable> {
    let mut table = WeightTable::single_edge();
    for n in 3..=max_n {
        table.extend_one_type(n, sampling, cache).map_err(err)?;
    }
    Ok(table)
}

fn summary<'py>(py: Python<'py>, coeffs: &[Sensitive], table: &WeightTable, tolerance: f64) -> PyResult<Bound<'py, PyDict>> {
    let a = assess(coeffs, table.stderrs(), tolerance);
    let d = PyDict::new(py);
    d.set_item("norm", a.norm)?;
    d.set_item("bound", a.bound)?;
    d.set_item("worst_ratio", a.worst_ratio)?;
    d.set_item("pass", a.pass)?;
    Ok(d)
}

/// Residual of the quadratic relation of order `N` on the given inputs.
#[pyfunction]
#[pyo3(signature = (big_n, inputs, samples=200_000, seed=7, tolerance=3.0, cache_path=None))]
fn linfty_residual<'py>(
    py: Python<'py>,
    big_n: usize,
    inputs: Vec<PyRef<'py, PyPolyvector>>,
    samples: u64,
    seed: u64,
    tolerance: f64,
    cache_path: Option<&str>,
) -> PyResult<Bound<'py, PyDict>> {
    let c = cache(cache_path)?;
    let table = one_type_table(big_n.saturating_sub(1), Sampling::new(samples, seed), &c)?;
    let sens: Vec<Polyvector<Sensitive>> = inputs.iter().map(|p| p.inner.convert()).collect();
    let refs: Vec<&Polyvector<Sensitive>> = sens.iter().collect();
    let res = polyfields::linfty_residual(big_n, &refs, &table, Normalization::Natural).map_err(err)?;
    let coeffs: Vec<Sensitive> = res.terms().map(|(_, c)| c.clone()).collect();
    summary(py, &coeffs, &table, tolerance)
}

/// Per-shape first obstruction of a bivector.
#[pyfunction]
#[pyo3(signature = (alpha, samples=200_000, seed=7, tolerance=3.0, cache_path=None))]
fn first_obstruction<'py>(
    py: Python<'py>,
    alpha: &PyPolyvector,
    samples: u64,
    seed: u64,
    tolerance: f64,
    cache_path: Option<&str>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let c = cache(cache_path)?;
    let table = one_type_table(4, Sampling::new(samples, seed), &c)?;
    let a: Polyvector<Sensitive> = alpha.inner.convert();
    let obs = polyfields::first_obstruction(&a, &table, Normalization::Natural).map_err(err)?;
    obs.shapes
        .iter()
        .map(|s| {
            let coeffs: Vec<Sensitive> = s.value.terms().map(|(_, c)| c.clone()).collect();
            let d = summary(py, &coeffs, &table, tolerance)?;
            d.set_item("representative", s.shape.representative.key())?;
            d.set_item("labeling_count", s.shape.labeling_count)?;
            d.set_item("weight_sum", s.weight_sum.value)?;
            d.set_item("passes_filter", s.passes_filter)?;
            Ok(d)
        })
        .collect()
}

/// Morphism relation residual on the given inputs, measured on probe monomials.
#[pyfunction]
#[pyo3(signature = (inputs, samples=200_000, seed=7, tolerance=3.0, cache_path=None))]
fn morphism_check<'py>(
    py: Python<'py>,
    inputs: Vec<PyRef<'py, PyPolyvector>>,
    samples: u64,
    seed: u64,
    tolerance: f64,
    cache_path: Option<&str>,
) -> PyResult<Bound<'py, PyDict>> {
    let c = cache(cache_path)?;
    let arities = inputs
        .iter()
        .map(|p| p.inner.arity().ok_or_else(|| PyValueError::new_err("inputs must have a single arity")))
        .collect::<PyResult<Vec<_>>>()?;
    let table = morphism_weights(&arities, Sampling::new(samples, seed), &c).map_err(err)?;
    let sens: Vec<Polyvector<Sensitive>> = inputs.iter().map(|p| p.inner.convert()).collect();
    let refs: Vec<&Polyvector<Sensitive>> = sens.iter().collect();
    let res = morphism_residual(&refs, &table).map_err(err)?;
    summary(py, &probe_outputs(&res).map_err(err)?, &table, tolerance)
}

#[pymodule]
fn formality_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_class::<PyPolyvector>()?;
    m.add_class::<PyOperator>()?;
    m.add_function(wrap_pyfunction!(enumerate_graphs, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_shapes, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_weight, m)?)?;
    m.add_function(wrap_pyfunction!(ladder_weight_exact, m)?)?;
    m.add_function(wrap_pyfunction!(linfty_residual, m)?)?;
    m.add_function(wrap_pyfunction!(first_obstruction, m)?)?;
    m.add_function(wrap_pyfunction!(morphism_check, m)?)?;
    m.add("CALIBRATION", formality::CALIBRATION)?;
    Ok(())
}

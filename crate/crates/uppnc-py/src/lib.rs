//! Python bindings. Rationals cross the boundary as `int` or strings such as
//! `"3/4"`; extended values come back as strings (`"+inf"` for infinity).

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use uppnc::curves::{self, Curve};
use uppnc::flowcontrol::{self, ArrivalSpec, NodeSpec, TandemSpec};
use uppnc::numerics::{format_rational, parse_rational};
use uppnc::subadd::{self, ConvOptions};
use uppnc::{Error, ExtendedRational, Rational};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::BudgetExceeded | Error::Divergence(_) | Error::NotPlain(_) => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn rational(v: &Bound<'_, PyAny>) -> PyResult<Rational> {
    if let Ok(n) = v.extract::<i64>() {
        return Ok(Rational::from_integer(n.into()));
    }
    let s: String = v.extract()?;
    parse_rational(&s).map_err(to_py)
}

fn extended(v: &Bound<'_, PyAny>) -> PyResult<ExtendedRational> {
    if let Ok(n) = v.extract::<i64>() {
        return Ok(ExtendedRational::from_int(n));
    }
    let s: String = v.extract()?;
    s.parse().map_err(to_py)
}

#[pyclass(name = "Curve", module = "uppnc", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyCurve {
    inner: Curve,
}

fn wrap(r: uppnc::Result<Curve>) -> PyResult<PyCurve> {
    r.map(|inner| PyCurve { inner }).map_err(to_py)
}

#[pymethods]
impl PyCurve {
    #[staticmethod]
    fn rate_latency(rate: &Bound<'_, PyAny>, latency: &Bound<'_, PyAny>) -> PyResult<Self> {
        wrap(curves::make_rate_latency(&rational(rate)?, &rational(latency)?))
    }

    #[staticmethod]
    fn token_bucket(sigma: &Bound<'_, PyAny>, rho: &Bound<'_, PyAny>) -> PyResult<Self> {
        wrap(curves::make_token_bucket(&rational(sigma)?, &rational(rho)?))
    }

    #[staticmethod]
    fn delta_zero() -> Self {
        PyCurve { inner: curves::make_delta_zero() }
    }

    #[staticmethod]
    fn zero() -> Self {
        PyCurve { inner: curves::make_zero() }
    }

    /// Parses the text form produced by `to_text`.
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        wrap(Curve::from_text(text))
    }

    fn eval(&self, t: &Bound<'_, PyAny>) -> PyResult<String> {
        Ok(self.inner.eval(&rational(t)?).to_string())
    }

    #[getter]
    fn transient(&self) -> String {
        format_rational(self.inner.transient())
    }

    #[getter]
    fn period(&self) -> String {
        format_rational(self.inner.period())
    }

    #[getter]
    fn increment(&self) -> String {
        format_rational(self.inner.increment())
    }

    #[getter]
    fn cardinality(&self) -> usize {
        self.inner.cardinality()
    }

    fn minimize(&self) -> PyResult<Self> {
        wrap(uppnc::minimize::minimize(&self.inner))
    }

    fn add_jump(&self, w: &Bound<'_, PyAny>) -> PyResult<Self> {
        wrap(curves::add_jump(&self.inner, &extended(w)?))
    }

    fn equivalent(&self, other: &PyCurve) -> PyResult<bool> {
        curves::equivalent(&self.inner, &other.inner).map_err(to_py)
    }

    /// CSV cut over `[0, horizon[`.
    fn to_csv(&self, horizon: &Bound<'_, PyAny>) -> PyResult<String> {
        uppnc::cli::export_csv(&self.inner, &rational(horizon)?).map_err(to_py)
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn __str__(&self) -> String {
        self.inner.to_text()
    }

    fn __repr__(&self) -> String {
        format!(
            "Curve(T={}, d={}, c={}, N={})",
            self.transient(),
            self.period(),
            self.increment(),
            self.cardinality()
        )
    }
}

#[pyfunction]
fn convolution(f: &PyCurve, g: &PyCurve) -> PyResult<PyCurve> {
    wrap(uppnc::minplus::convolution(&f.inner, &g.inner))
}

#[pyfunction]
fn minimum(f: &PyCurve, g: &PyCurve) -> PyResult<PyCurve> {
    wrap(uppnc::minplus::minimum(&f.inner, &g.inner))
}

/// Returns the result and the name of the branch that produced it.
#[pyfunction]
fn conv_optimized(f: &PyCurve, g: &PyCurve) -> PyResult<(PyCurve, String)> {
    let (c, trace) = subadd::conv_optimized(&f.inner, &g.inner, &ConvOptions::default()).map_err(to_py)?;
    Ok((PyCurve { inner: c }, trace.branch.to_string()))
}

#[pyfunction]
fn sac(f: &PyCurve) -> PyResult<PyCurve> {
    wrap(subadd::sac(&f.inner))
}

#[pyfunction]
fn sac_rate_latency_jump(
    rate: &Bound<'_, PyAny>,
    latency: &Bound<'_, PyAny>,
    window: &Bound<'_, PyAny>,
) -> PyResult<PyCurve> {
    wrap(subadd::sac_rate_latency_jump(&rational(rate)?, &rational(latency)?, &extended(window)?))
}

#[pyfunction]
fn delay_bound(sigma: &Bound<'_, PyAny>, rho: &Bound<'_, PyAny>, beta: &PyCurve) -> PyResult<String> {
    let alpha = ArrivalSpec::new(rational(sigma)?, rational(rho)?).map_err(to_py)?;
    flowcontrol::delay_bound(&alpha, &beta.inner).map(|d| d.to_string()).map_err(to_py)
}

#[pyfunction]
fn backlog_bound(sigma: &Bound<'_, PyAny>, rho: &Bound<'_, PyAny>, beta: &PyCurve) -> PyResult<String> {
    let alpha = ArrivalSpec::new(rational(sigma)?, rational(rho)?).map_err(to_py)?;
    flowcontrol::backlog_bound(&alpha, &beta.inner).map(|d| d.to_string()).map_err(to_py)
}

#[pyclass(name = "Tandem", module = "uppnc", frozen)]
struct PyTandem {
    inner: TandemSpec,
}

#[pymethods]
impl PyTandem {
    /// `nodes` holds `(rate, latency)` pairs; `windows[k]` sits in front of node `k + 2`.
    #[new]
    fn new(nodes: Vec<(Bound<'_, PyAny>, Bound<'_, PyAny>)>, windows: Vec<Bound<'_, PyAny>>) -> PyResult<Self> {
        let nodes = nodes
            .iter()
            .map(|(r, t)| NodeSpec::new(rational(r)?, rational(t)?).map_err(to_py))
            .collect::<PyResult<Vec<_>>>()?;
        let windows = windows.iter().map(extended).collect::<PyResult<Vec<_>>>()?;
        Ok(PyTandem { inner: TandemSpec::new(nodes, windows).map_err(to_py)? })
    }

    /// Network file contents, see the command-line documentation.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        let net = uppnc::cli::parse_network_str(text).map_err(to_py)?;
        Ok(PyTandem { inner: net.tandem })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn exact_equivalent(&self) -> PyResult<PyCurve> {
        wrap(flowcontrol::exact_equivalent(&self.inner))
    }

    fn approx_equivalent(&self) -> PyResult<PyCurve> {
        wrap(flowcontrol::approx_equivalent(&self.inner))
    }

    fn per_node_exact(&self, i: usize) -> PyResult<PyCurve> {
        wrap(flowcontrol::per_node_exact(&self.inner, i))
    }

    fn per_node_approx(&self, i: usize) -> PyResult<PyCurve> {
        wrap(flowcontrol::per_node_approx(&self.inner, i))
    }
}

#[pymodule(name = "uppnc")]
fn uppnc_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCurve>()?;
    m.add_class::<PyTandem>()?;
    m.add_function(wrap_pyfunction!(convolution, m)?)?;
    m.add_function(wrap_pyfunction!(minimum, m)?)?;
    m.add_function(wrap_pyfunction!(conv_optimized, m)?)?;
    m.add_function(wrap_pyfunction!(sac, m)?)?;
    m.add_function(wrap_pyfunction!(sac_rate_latency_jump, m)?)?;
    m.add_function(wrap_pyfunction!(delay_bound, m)?)?;
    m.add_function(wrap_pyfunction!(backlog_bound, m)?)?;
    Ok(())
}

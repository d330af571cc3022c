//! Python bindings for the core solver and the verification suite.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use invheat_core::spectral::UnknownBcKind;
use invheat_core::verify::{run_suite, Options};
use invheat_core::{compatibility_check, parse, BcKind, Branch, Expr, ModeId, ProblemSpec, SeriesSolution};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn kind_of(bc: &str) -> PyResult<BcKind> {
    bc.parse().map_err(|e: UnknownBcKind| value_err(e))
}

fn mode_of(branch: u8, k: u32) -> PyResult<ModeId> {
    let branch = Branch::from_index(branch).ok_or_else(|| value_err(format!("branch must be 0, 1 or 2, got {branch}")))?;
    Ok(ModeId { branch, k })
}

/// A parsed expression in `x`.
#[pyclass(name = "Expression", module = "invheat", frozen)]
pub struct PyExpression {
    inner: Expr,
}

#[pymethods]
impl PyExpression {
    #[new]
    fn new(source: &str) -> PyResult<Self> {
        Ok(Self { inner: parse(source).map_err(value_err)? })
    }

    fn eval(&self, x: f64) -> PyResult<f64> {
        self.inner.eval(x).map_err(value_err)
    }

    #[pyo3(signature = (order = 1))]
    fn derivative(&self, order: usize) -> Self {
        Self { inner: self.inner.nth_derivative(order) }
    }

    /// The expression with `x` replaced by `-x`.
    fn reflect(&self) -> Self {
        Self { inner: self.inner.reflect() }
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Expression('{}')", self.inner)
    }
}

#[pyfunction]
fn eigenvalue(bc: &str, branch: u8, k: u32, epsilon: f64) -> PyResult<f64> {
    invheat_core::eigenvalue(kind_of(bc)?, mode_of(branch, k)?, epsilon).map_err(value_err)
}

/// `(branch, k, lambda, kernel)` for every admissible mode with `k <= kmax`.
#[pyfunction]
fn spectrum(bc: &str, epsilon: f64, kmax: u32) -> PyResult<Vec<(u8, u32, f64, String)>> {
    let scheme = kind_of(bc)?.scheme();
    scheme
        .modes(kmax)
        .into_iter()
        .map(|m| {
            let lambda = scheme.eigenvalue(m, epsilon).map_err(value_err)?;
            let name = match m.branch {
                Branch::Constant => "1",
                _ => scheme.kernel_name(m).map_err(value_err)?,
            };
            Ok((m.branch.index(), m.k, lambda, name.to_string()))
        })
        .collect()
}

/// `(name, residual, passed)` per boundary hypothesis.
#[pyfunction]
#[pyo3(signature = (bc, phi, psi, tol = 1e-10))]
fn compatibility(bc: &str, phi: &str, psi: &str, tol: f64) -> PyResult<Vec<(String, f64, bool)>> {
    let phi = parse(phi).map_err(value_err)?;
    let psi = parse(psi).map_err(value_err)?;
    let report = compatibility_check(&phi, &psi, kind_of(bc)?, tol);
    Ok(report.entries.iter().map(|h| (h.name(), h.residual, h.passed)).collect())
}

#[allow(clippy::too_many_arguments)]
fn build_spec(
    bc: &str,
    epsilon: f64,
    final_time: f64,
    phi: &str,
    psi: &str,
    n: u32,
    quad_nodes: usize,
    nx: usize,
    nt: usize,
) -> PyResult<ProblemSpec> {
    let spec = ProblemSpec::new(kind_of(bc)?, epsilon, final_time, parse(phi).map_err(value_err)?, parse(psi).map_err(value_err)?)
        .with_truncation(n)
        .with_quad_nodes(quad_nodes)
        .with_grid(nx, nt);
    spec.validate().map_err(value_err)?;
    Ok(spec)
}

/// A reconstructed pair `(u, f)`.
#[pyclass(name = "Solution", module = "invheat", frozen)]
pub struct PySolution {
    inner: SeriesSolution,
}

#[pymethods]
impl PySolution {
    fn u(&self, x: f64, t: f64) -> PyResult<f64> {
        self.inner.evaluate_u(x, t).map_err(value_err)
    }

    fn f(&self, x: f64) -> PyResult<f64> {
        self.inner.evaluate_f(x).map_err(value_err)
    }

    /// `u` on `xs × ts`, one row per time.
    fn u_grid(&self, xs: Vec<f64>, ts: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        let flat = self.inner.evaluate_u_grid(&xs, &ts).map_err(value_err)?;
        Ok(flat.chunks(xs.len().max(1)).map(<[f64]>::to_vec).collect())
    }

    fn f_grid(&self, xs: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.evaluate_f_grid(&xs).map_err(value_err)
    }

    fn pde_residual(&self, x: f64, t: f64) -> PyResult<f64> {
        self.inner.pde_residual(x, t).map_err(value_err)
    }

    #[getter]
    fn tail_estimate(&self) -> f64 {
        self.inner.tail_estimate
    }

    #[getter]
    fn min_denominator(&self) -> f64 {
        self.inner.min_denominator()
    }

    /// `(branch, k, lambda, c, f_coef)` per retained mode.
    #[getter]
    fn modes(&self) -> Vec<(u8, u32, f64, f64, f64)> {
        self.inner.modes.iter().map(|m| (m.mode.branch.index(), m.mode.k, m.lambda, m.c, m.f_coef)).collect()
    }

    fn __repr__(&self) -> String {
        let s = &self.inner.spec;
        format!("Solution(bc='{}', epsilon={}, T={}, N={})", s.kind, s.epsilon, s.final_time, s.truncation)
    }
}

#[pyfunction]
#[pyo3(signature = (bc, epsilon, final_time, phi, psi, n = 64, quad_nodes = 512))]
fn solve(bc: &str, epsilon: f64, final_time: f64, phi: &str, psi: &str, n: u32, quad_nodes: usize) -> PyResult<PySolution> {
    let spec = build_spec(bc, epsilon, final_time, phi, psi, n, quad_nodes, ProblemSpec::DEFAULT_NX, ProblemSpec::DEFAULT_NT)?;
    let inner = invheat_core::solve(&spec).map_err(value_err)?;
    Ok(PySolution { inner })
}

/// Runs the verification suite and returns the JSON report.
#[pyfunction]
#[pyo3(signature = (bc, epsilon, final_time, phi, psi, n = 64, quad_nodes = 512, nx = 256, nt = 512, round_trip = true))]
#[allow(clippy::too_many_arguments)]
fn verify(
    py: Python<'_>,
    bc: &str,
    epsilon: f64,
    final_time: f64,
    phi: &str,
    psi: &str,
    n: u32,
    quad_nodes: usize,
    nx: usize,
    nt: usize,
    round_trip: bool,
) -> PyResult<String> {
    let spec = build_spec(bc, epsilon, final_time, phi, psi, n, quad_nodes, nx, nt)?;
    let options = Options { round_trip, ..Options::default() };
    Ok(py.detach(|| run_suite(&spec, &options).to_json()))
}

#[pymodule]
fn invheat(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyExpression>()?;
    m.add_class::<PySolution>()?;
    m.add_function(wrap_pyfunction!(eigenvalue, m)?)?;
    m.add_function(wrap_pyfunction!(spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(compatibility, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}

//! Python bindings for the main model, Hermite/Wick, path-synthesis, and
//! functional operations.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use wickchaos::error::Error;
use wickchaos::functionals;
use wickchaos::hermite::{self, TestFunction};
use wickchaos::models::Model;
use wickchaos::pathgen::{self, Grid, PathSample};

fn to_py_err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// An increment-variance model addressed by its spec string.
#[pyclass(name = "Model")]
struct PyModel {
    inner: Model,
}

#[pymethods]
impl PyModel {
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        Ok(PyModel {
            inner: Model::from_spec(spec).map_err(to_py_err)?,
        })
    }

    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    fn beta_index(&self) -> f64 {
        self.inner.beta_index()
    }

    fn zeta(&self) -> f64 {
        self.inner.zeta()
    }

    fn sigma2(&self, x: f64) -> PyResult<f64> {
        self.inner.sigma2(x).map_err(to_py_err)
    }

    fn rho(&self, s: f64) -> PyResult<f64> {
        self.inner.rho(s).map_err(to_py_err)
    }

    fn tau_h(&self, h: f64, s: f64) -> PyResult<f64> {
        self.inner.tau_h(h, s).map_err(to_py_err)
    }

    fn supports_order(&self, k: usize) -> bool {
        self.inner.supports_order(k)
    }

    fn max_supported_order(&self) -> usize {
        self.inner.max_supported_order()
    }

    fn chaos_second_moment(&self, k: usize, a: f64, b: f64) -> PyResult<f64> {
        functionals::chaos_second_moment(&self.inner, k, a, b).map_err(to_py_err)
    }

    fn kernel_integral(&self, k: usize, h: f64, a: f64, b: f64) -> PyResult<f64> {
        functionals::kernel_integral(&self.inner, k, h, a, b).map_err(to_py_err)
    }

    fn __repr__(&self) -> String {
        format!("Model('{}')", self.inner.name())
    }
}

/// A seeded sample path on a uniform grid.
#[pyclass(name = "Path")]
struct PyPath {
    inner: PathSample,
}

#[pymethods]
impl PyPath {
    fn values(&self) -> Vec<f64> {
        self.inner.values.clone()
    }

    fn delta(&self) -> f64 {
        self.inner.grid.delta()
    }

    fn horizon(&self) -> f64 {
        self.inner.grid.horizon()
    }

    fn seed(&self) -> u64 {
        self.inner.seed
    }

    fn __len__(&self) -> usize {
        self.inner.values.len()
    }
}

/// Normalized Hermite polynomial H_k(x) with E[H_k(eta)^2] = 1.
#[pyfunction]
fn hermite_fn(k: usize, x: f64) -> f64 {
    hermite::hermite(k, x)
}

/// k-th Wick power of x under variance v.
#[pyfunction]
fn wick_power(x: f64, v: f64, k: usize) -> PyResult<f64> {
    hermite::wick_power(x, v, k).map_err(to_py_err)
}

/// Hermite coefficients a_0..a_J of a test function spec; returns
/// (coefficients, rank or None, E f^2, tail mass).
#[pyfunction]
#[pyo3(signature = (f_spec, j_max=12, n_quad=400))]
fn hermite_coeffs(
    f_spec: &str,
    j_max: usize,
    n_quad: usize,
) -> PyResult<(Vec<f64>, Option<usize>, f64, f64)> {
    let f = TestFunction::parse(f_spec).map_err(to_py_err)?;
    let c = hermite::hermite_coeffs(&f, j_max, n_quad).map_err(to_py_err)?;
    Ok((c.a.clone(), c.k0, c.f_norm_sq, c.tail_mass))
}

/// Exact circulant-embedding synthesis of one path.
#[pyfunction]
fn simulate(model: &PyModel, t: f64, n: usize, seed: u64) -> PyResult<PyPath> {
    let grid = Grid::new(t, n).map_err(to_py_err)?;
    Ok(PyPath {
        inner: pathgen::simulate_circulant(&model.inner, grid, seed).map_err(to_py_err)?,
    })
}

/// Riemann-sum increment functional int_a^b f((G(x+h)-G(x))/sigma(h)) dx.
#[pyfunction]
fn increment_functional(
    path: &PyPath,
    model: &PyModel,
    f_spec: &str,
    h_steps: usize,
    a: f64,
    b: f64,
) -> PyResult<f64> {
    let f = TestFunction::parse(f_spec).map_err(to_py_err)?;
    Ok(
        functionals::increment_functional(&path.inner, &model.inner, &f, h_steps, (a, b))
            .map_err(to_py_err)?
            .value,
    )
}

/// Wick-power functional of order k at scale delta_steps * delta.
#[pyfunction]
fn wick_functional(
    path: &PyPath,
    model: &PyModel,
    k: usize,
    delta_steps: usize,
    a: f64,
    b: f64,
) -> PyResult<f64> {
    Ok(
        functionals::wick_functional(&path.inner, &model.inner, k, delta_steps, (a, b))
            .map_err(to_py_err)?
            .value,
    )
}

#[pymodule(name = "wickchaos")]
fn bindings(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_class::<PyPath>()?;
    m.add_function(wrap_pyfunction!(hermite_fn, m)?)?;
    m.add_function(wrap_pyfunction!(wick_power, m)?)?;
    m.add_function(wrap_pyfunction!(hermite_coeffs, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(increment_functional, m)?)?;
    m.add_function(wrap_pyfunction!(wick_functional, m)?)?;
    Ok(())
}

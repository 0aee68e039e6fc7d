//! Python bindings: exact polynomial densities, slice domains, the slice
//! operators, the product solver, Sobolev norms and the suite runner.

use std::path::PathBuf;

use dbar_core::density::ExactDensity;
use dbar_core::form::Form01;
use dbar_core::grid::sample_to_grid;
use dbar_core::harness::{self, RunConfig, Suite, Summary};
use dbar_core::product;
use dbar_core::slice_ops::{self, Operand};
use dbar_core::sobolev;
use dbar_core::{DbarError, ExactComplex, GridSpec, ProductGrid, Scalar, SobolevIndex};
use num_complex::Complex64;
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

fn err(e: DbarError) -> PyErr {
    match e {
        DbarError::Io(io) => PyOSError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// A simply connected slice: the unit disc or the image of a polynomial map.
#[pyclass(name = "SliceDomain", module = "dbar", from_py_object)]
#[derive(Clone)]
struct PySliceDomain(dbar_core::SliceDomain);

#[pymethods]
impl PySliceDomain {
    #[staticmethod]
    fn disc() -> Self {
        Self(dbar_core::SliceDomain::disc())
    }

    /// Image of the disc under `φ(ζ) = Σ coeffs[j] ζ^j`.
    #[staticmethod]
    fn conformal(coeffs: Vec<Complex64>) -> PyResult<Self> {
        dbar_core::SliceDomain::conformal(coeffs).map(Self).map_err(err)
    }

    fn is_disc(&self) -> bool {
        self.0.is_disc()
    }

    fn forward(&self, zeta: Complex64) -> Complex64 {
        self.0.forward(zeta)
    }

    fn green(&self, z: Complex64, w: Complex64) -> PyResult<f64> {
        dbar_core::green(&self.0, z, w).map_err(err)
    }

    fn bergman_kernel(&self, z: Complex64, w: Complex64) -> PyResult<Complex64> {
        dbar_core::bergman_kernel(&self.0, z, w).map_err(err)
    }

    fn __repr__(&self) -> String {
        if self.0.is_disc() {
            "SliceDomain.disc()".into()
        } else {
            "SliceDomain.conformal(...)".into()
        }
    }
}

/// Polynomial in `z_j, z̄_j` with exact Gaussian-rational coefficients.
#[pyclass(name = "Density", module = "dbar", from_py_object)]
#[derive(Clone)]
struct PyDensity(ExactDensity);

#[pymethods]
impl PyDensity {
    /// `terms`: list of `(exponents, coefficient)` with `exponents` a list of
    /// `(m, n)` pairs, one per variable. Float coefficients are converted
    /// exactly.
    #[new]
    fn new(nvars: usize, terms: Vec<(Vec<(u32, u32)>, Complex64)>) -> PyResult<Self> {
        let mut d = ExactDensity::zero(nvars, 0);
        for (exps, c) in terms {
            if exps.len() != nvars {
                return Err(PyValueError::new_err(format!("{} exponent pairs for {nvars} variables", exps.len())));
            }
            let c = ExactComplex::from_c64(c).map_err(err)?;
            d = d.add(&ExactDensity::monomial(&exps, c)).map_err(err)?;
        }
        Ok(Self(d))
    }

    #[staticmethod]
    fn monomial(exps: Vec<(u32, u32)>) -> Self {
        Self(ExactDensity::monomial(&exps, ExactComplex::ratio(1, 1)))
    }

    /// Seeded random density from the dyadic family used by the suites.
    #[staticmethod]
    #[pyo3(signature = (nvars, degree, seed = 42, terms = 6))]
    fn random(nvars: usize, degree: u32, seed: u64, terms: usize) -> PyResult<Self> {
        let mut rng = dbar_core::family::rng(seed);
        dbar_core::family::random_density(&mut rng, nvars, degree, terms).map(Self).map_err(err)
    }

    #[getter]
    fn nvars(&self) -> usize {
        self.0.nvars()
    }

    #[getter]
    fn degree(&self) -> u32 {
        self.0.actual_degree()
    }

    /// `[(exponents, coefficient)]`, coefficients rounded to doubles.
    fn terms(&self) -> PyResult<Vec<(Vec<(u32, u32)>, Complex64)>> {
        self.0
            .terms()
            .map(|(m, c)| Ok((m.exps().to_vec(), c.to_c64().map_err(err)?)))
            .collect()
    }

    fn eval(&self, z: Vec<Complex64>) -> PyResult<Complex64> {
        self.0.eval(&z).map_err(err)
    }

    fn dz(&self, j: usize) -> Self {
        Self(self.0.dz(j))
    }

    fn dzbar(&self, j: usize) -> Self {
        Self(self.0.dzbar(j))
    }

    fn max_abs_coeff(&self) -> PyResult<f64> {
        self.0.max_abs_coeff().map_err(err)
    }

    /// `⟨self, other⟩ = coeff · π^pi_power` on the unit polydisc.
    fn inner(&self, other: &PyDensity) -> PyResult<(Complex64, usize)> {
        let ip = self.0.inner(&other.0).map_err(err)?;
        Ok((ip.coeff.to_c64().map_err(err)?, ip.pi_power))
    }

    fn __add__(&self, other: &PyDensity) -> PyResult<Self> {
        self.0.add(&other.0).map(Self).map_err(err)
    }

    fn __sub__(&self, other: &PyDensity) -> PyResult<Self> {
        self.0.sub(&other.0).map(Self).map_err(err)
    }

    fn __mul__(&self, other: &PyDensity) -> PyResult<Self> {
        self.0.mul(&other.0).map(Self).map_err(err)
    }

    fn __eq__(&self, other: &PyDensity) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!("Density(nvars={}, terms={}, degree={})", self.0.nvars(), self.0.len(), self.0.actual_degree())
    }
}

fn slice_op(name: &str) -> PyResult<slice_ops::SliceOperator> {
    use slice_ops::SliceOperator as S;
    match name {
        "G" => Ok(S::G),
        "T" => Ok(S::T),
        "Ttilde" => Ok(S::Ttilde),
        "P" => Ok(S::P),
        _ => Err(PyValueError::new_err(format!("unknown operator '{name}', expected G, T, Ttilde or P"))),
    }
}

/// Applies `G`, `T`, `Ttilde` or `P` in variable `axis` (exact, disc only).
#[pyfunction]
#[pyo3(signature = (op, f, axis = 0, slice = None))]
fn apply(op: &str, f: &PyDensity, axis: usize, slice: Option<PySliceDomain>) -> PyResult<PyDensity> {
    let slice = slice.map_or_else(dbar_core::SliceDomain::disc, |s| s.0);
    f.0.slice_apply(slice_op(op)?, Default::default(), &slice, axis).map(PyDensity).map_err(err)
}

/// `‖Pf + ∂G∂̄f - f‖` for a density in one variable.
#[pyfunction]
fn spencer_residual(f: &PyDensity) -> PyResult<f64> {
    slice_ops::spencer_residual(&f.0, &dbar_core::SliceDomain::disc(), 0).map_err(err)
}

/// Canonical solution of `∂̄u = f` on the unit polydisc, exactly.
#[pyfunction]
fn canonical_solution(components: Vec<PyDensity>) -> PyResult<PyDensity> {
    let n = components.len();
    let form = Form01::new(components.into_iter().map(|c| c.0).collect()).map_err(err)?;
    let slices = vec![dbar_core::SliceDomain::disc(); n];
    product::canonical_solution_product(&form, &slices).map(|s| PyDensity(s.u)).map_err(err)
}

/// `∂̄u` as its list of components.
#[pyfunction]
#[pyo3(name = "dbar")]
fn dbar_form(u: &PyDensity) -> PyResult<Vec<PyDensity>> {
    Ok(Form01::dbar_of(&u.0).map_err(err)?.components().iter().cloned().map(PyDensity).collect())
}

#[pyfunction]
#[pyo3(signature = (u, maxdeg = 6))]
fn orthogonality_residual(u: &PyDensity, maxdeg: u32) -> PyResult<f64> {
    product::orthogonality_residual(&u.0, maxdeg).map_err(err)
}

/// Solves `∂̄u = f` numerically on a product grid over `slices` and returns
/// `(dbar_residual, orthogonality_residual)`.
#[pyfunction]
#[pyo3(signature = (components, slices, nr = 20, ntheta = 32))]
fn solve_numeric(components: Vec<PyDensity>, slices: Vec<PySliceDomain>, nr: usize, ntheta: usize) -> PyResult<(f64, f64)> {
    let slices: Vec<_> = slices.into_iter().map(|s| s.0).collect();
    let grid = ProductGrid::build(&slices, GridSpec { nr, ntheta }).map_err(err)?;
    let sampled = components.iter().map(|c| sample_to_grid(&c.0, &grid)).collect::<Result<Vec<_>, _>>().map_err(err)?;
    let form = Form01::new(sampled).map_err(err)?;
    let sol = product::canonical_solution_product(&form, &slices).map_err(err)?;
    let dbar = product::dbar_residual(&sol.u, &form).map_err(err)?;
    let orth = product::orthogonality_residual(&sol.u, 6).map_err(err)?;
    Ok((dbar, orth))
}

/// `‖f‖_{W^{k,p}}` over the unit polydisc.
#[pyfunction]
fn sobolev_norm(f: &PyDensity, k: usize, p: f64) -> PyResult<f64> {
    let idx = SobolevIndex::new(k, p).map_err(err)?;
    sobolev::sobolev_norm(&f.0, idx).map(|r| r.total).map_err(err)
}

/// Runs a suite with default settings, writes its report to `out` and
/// returns `(pass, max_residual, seed)` from its summary.
#[pyfunction]
#[pyo3(signature = (suite, out, seed = 42, degree = None))]
fn run_suite(suite: &str, out: PathBuf, seed: u64, degree: Option<u32>) -> PyResult<(bool, f64, u64)> {
    let suite: Suite = suite.parse().map_err(err)?;
    let mut cfg = RunConfig::new(suite, out);
    cfg.seed = seed;
    if let Some(d) = degree {
        cfg.domain.degree = d;
    }
    let result = harness::run_and_emit(&cfg).map_err(err)?;
    let s = Summary::of(&result);
    Ok((s.pass, s.max_residual, s.seed))
}

#[pymodule]
fn dbar(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySliceDomain>()?;
    m.add_class::<PyDensity>()?;
    m.add_function(wrap_pyfunction!(apply, m)?)?;
    m.add_function(wrap_pyfunction!(spencer_residual, m)?)?;
    m.add_function(wrap_pyfunction!(canonical_solution, m)?)?;
    m.add_function(wrap_pyfunction!(dbar_form, m)?)?;
    m.add_function(wrap_pyfunction!(orthogonality_residual, m)?)?;
    m.add_function(wrap_pyfunction!(solve_numeric, m)?)?;
    m.add_function(wrap_pyfunction!(sobolev_norm, m)?)?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    m.add("SUITES", Suite::ALL.iter().map(|s| s.name()).collect::<Vec<_>>())?;
    Ok(())
}

use std::cell::RefCell;
use std::path::PathBuf;

use num_complex::Complex64 as C;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde_json::Value;

use hallzeta::{ch, cli, mellin, permutohedron as perm, qforms, shuffle, specfun};

create_exception!(hallzeta, HallzetaError, PyException);

fn err(e: hallzeta::Error) -> PyErr {
    HallzetaError::new_err(e.to_string())
}

fn json_to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for it in items {
                list.append(json_to_py(py, it)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, it) in map {
                dict.set_item(k, json_to_py(py, it)?)?;
            }
            dict.into_any()
        }
    })
}

fn to_py<'py, T: serde::Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    json_to_py(py, &serde_json::to_value(v).map_err(|e| HallzetaError::new_err(e.to_string()))?)
}

#[pyfunction]
fn zeta(s: C) -> PyResult<C> {
    specfun::zeta(s).map_err(err)
}

#[pyfunction]
fn zeta_star(s: C) -> PyResult<C> {
    specfun::zeta_star(s).map_err(err)
}

#[pyfunction]
fn phi(s: C) -> PyResult<C> {
    specfun::phi(s).map_err(err)
}

#[pyfunction]
fn lambda_big(s: C) -> PyResult<C> {
    specfun::lambda_big(s).map_err(err)
}

#[pyfunction]
fn theta(b: f64) -> PyResult<f64> {
    specfun::theta(b).map_err(err)
}

#[pyfunction]
fn find_zeta_zeros(t_min: f64, t_max: f64) -> PyResult<Vec<f64>> {
    specfun::find_zeta_zeros(t_min, t_max).map_err(err)
}

#[pyclass(name = "ZetaZeroCache", frozen)]
struct PyZeroCache(specfun::ZetaZeroCache);

#[pymethods]
impl PyZeroCache {
    #[new]
    #[pyo3(signature = (ordinates, tolerance = 1e-6))]
    fn new(ordinates: Vec<f64>, tolerance: f64) -> PyResult<Self> {
        specfun::ZetaZeroCache::new(ordinates, tolerance).map(Self).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (t_min, t_max, tolerance = 1e-6))]
    fn compute(t_min: f64, t_max: f64, tolerance: f64) -> PyResult<Self> {
        specfun::ZetaZeroCache::compute(t_min, t_max, tolerance).map(Self).map_err(err)
    }

    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        specfun::ZetaZeroCache::read(&path).map(Self).map_err(err)
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        self.0.write(&path).map_err(err)
    }

    #[getter]
    fn ordinates(&self) -> Vec<f64> {
        self.0.ordinates.clone()
    }

    fn rho(&self, k: usize) -> Option<C> {
        self.0.rho(k)
    }

    fn __len__(&self) -> usize {
        self.0.ordinates.len()
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }
}

#[pyclass(name = "GramBundle", frozen)]
struct PyGramBundle(qforms::GramBundle);

#[pymethods]
impl PyGramBundle {
    #[new]
    fn new(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        qforms::GramBundle::from_rows(&rows).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_tau(x: f64, y: f64) -> PyResult<Self> {
        Ok(Self(qforms::bundle_from_tau(qforms::UpperHalfPoint::new(x, y).map_err(err)?)))
    }

    #[staticmethod]
    fn from_iwasawa(a1: f64, a2: f64, x: f64) -> PyResult<Self> {
        qforms::bundle_from_iwasawa(a1, a2, x).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        qforms::GramBundle::from_json(text).map(Self).map_err(err)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    #[getter]
    fn gram(&self) -> Vec<Vec<f64>> {
        self.0.rows()
    }

    #[getter]
    fn rank(&self) -> usize {
        self.0.rank()
    }

    fn degree(&self) -> f64 {
        qforms::degree(&self.0)
    }

    fn q(&self, v: Vec<i64>) -> PyResult<f64> {
        if v.len() != self.0.rank() {
            return Err(HallzetaError::new_err(format!("vector of length {} for rank {}", v.len(), self.0.rank())));
        }
        Ok(self.0.q(&v))
    }

    /// Primitive vectors spanning rank-one subbundles of degree ≥ degree_min.
    fn rank1_subbundles(&self, degree_min: f64) -> PyResult<Vec<Vec<i64>>> {
        let v = qforms::enumerate_rank1_subbundles(&self.0, degree_min).map_err(err)?;
        Ok(v.into_iter().map(|p| p.coords).collect())
    }

    fn __repr__(&self) -> String {
        format!("GramBundle({:?})", self.0.rows())
    }
}

/// (f1 ∗ f2)(E) for Python callables of the degree.
#[pyfunction]
fn hall_product_11(f1: Bound<'_, PyAny>, f2: Bound<'_, PyAny>, bundle: &PyGramBundle, degree_floor: f64) -> PyResult<C> {
    let failure: RefCell<Option<PyErr>> = RefCell::new(None);
    let call = |f: &Bound<'_, PyAny>, d: f64| -> C {
        match f.call1((d,)).and_then(|v| v.extract::<C>()) {
            Ok(z) => z,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                C::new(f64::NAN, f64::NAN)
            }
        }
    };
    let v = qforms::hall_product_11(|d| call(&f1, d), |d| call(&f2, d), &bundle.0, degree_floor).map_err(err)?;
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

#[pyfunction]
fn eisenstein_hall_product(t1: C, t2: C, bundle: &PyGramBundle) -> PyResult<C> {
    qforms::eisenstein_hall_product(t1, t2, &bundle.0).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (x, y, s, tol = 1e-12))]
fn eisenstein_maass(x: f64, y: f64, s: C, tol: f64) -> PyResult<C> {
    qforms::eisenstein_maass(qforms::UpperHalfPoint::new(x, y).map_err(err)?, s, tol).map_err(err)
}

#[pyclass(name = "LogGaussian", frozen)]
struct PyLogGaussian(mellin::LogGaussian);

#[pymethods]
impl PyLogGaussian {
    #[new]
    #[pyo3(signature = (mu, sigma, amplitude = 1.0))]
    fn new(mu: Vec<f64>, sigma: Vec<f64>, amplitude: f64) -> PyResult<Self> {
        mellin::LogGaussian::new(mu, sigma, amplitude).map(Self).map_err(err)
    }

    fn __call__(&self, a: Vec<f64>) -> PyResult<f64> {
        self.check(a.len())?;
        Ok(self.0.eval(&a))
    }

    /// Closed-form Mellin transform.
    fn mellin(&self, s: Vec<C>) -> PyResult<C> {
        self.check(s.len())?;
        Ok(self.0.mellin(&s))
    }

    /// Mellin transform by quadrature.
    #[pyo3(signature = (s, tol = 1e-12))]
    fn mellin_numeric(&self, s: Vec<C>, tol: f64) -> PyResult<C> {
        self.check(s.len())?;
        let cfg = mellin::MellinConfig { tol, ..Default::default() };
        mellin::mellin_forward(|a| Ok(self.0.eval(a)), &s, &cfg).map_err(err)
    }

    /// Inverse transform of the closed form along Re s = sigma0.
    #[pyo3(signature = (a, sigma0, tol = 1e-11))]
    fn mellin_inverse(&self, a: Vec<f64>, sigma0: Vec<f64>, tol: f64) -> PyResult<C> {
        let ev = mellin::mellin_closed_form(&self.0);
        mellin::mellin_inverse(&ev, &a, &mellin::VerticalContour::standard(sigma0), tol).map_err(err)
    }

    fn evaluator(&self) -> PyEvaluator {
        PyEvaluator(mellin::mellin_closed_form(&self.0))
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }
}

impl PyLogGaussian {
    fn check(&self, n: usize) -> PyResult<()> {
        if n == self.0.dim() {
            Ok(())
        } else {
            Err(HallzetaError::new_err(format!("expected {} coordinates, got {n}", self.0.dim())))
        }
    }
}

/// Coefficient function of ζ* on the strip containing Re s = sigma.
#[pyfunction]
fn zeta_star_coefficient(a: f64, sigma: f64) -> PyResult<f64> {
    mellin::zeta_star_coefficient(a, mellin::Strip::of(sigma).map_err(err)?).map_err(err)
}

/// A shuffle-algebra element evaluated pointwise.
#[pyclass(name = "Evaluator", frozen)]
struct PyEvaluator(shuffle::GradedEvaluator);

#[pymethods]
impl PyEvaluator {
    /// Wraps a Python callable taking a list of complex numbers.
    #[staticmethod]
    #[pyo3(signature = (degree, f, symmetric = false))]
    fn from_callable(degree: usize, f: Py<PyAny>, symmetric: bool) -> Self {
        Self(shuffle::GradedEvaluator::new(degree, symmetric, "python callable", move |s| {
            Python::attach(|py| {
                f.call1(py, (s.to_vec(),))
                    .and_then(|v| v.extract::<C>(py))
                    .map_err(|e| hallzeta::Error::Domain(format!("python callable failed: {e}")))
            })
        }))
    }

    #[staticmethod]
    fn f11() -> Self {
        Self(shuffle::f11())
    }

    #[staticmethod]
    fn f_lambda(l1: f64, l2: f64) -> PyResult<Self> {
        shuffle::f_lambda(l1, l2).map(Self).map_err(err)
    }

    #[getter]
    fn degree(&self) -> usize {
        self.0.degree()
    }

    fn __call__(&self, py: Python<'_>, s: Vec<C>) -> PyResult<C> {
        py.detach(|| self.0.eval(&s)).map_err(err)
    }

    /// The ⊛ product with kernel Φ.
    fn shuffle(&self, other: &PyEvaluator) -> Self {
        Self(shuffle::shuffle_product(&self.0, &other.0, shuffle::phi_kernel()))
    }

    /// The symmetric ★ product with kernel Λ.
    fn star(&self, other: &PyEvaluator) -> Self {
        Self(shuffle::symmetric_shuffle(&self.0, &other.0, shuffle::lambda_kernel()))
    }

    /// Division by Π_{i<j} Λ(s_i - s_j).
    fn untwist(&self) -> Self {
        Self(shuffle::untwist(&self.0, shuffle::lambda_kernel()))
    }

    fn mult2(&self) -> PyResult<Self> {
        shuffle::mult2(&self.0).map(Self).map_err(err)
    }

    fn symmetry_defect(&self, py: Python<'_>, s: Vec<C>) -> PyResult<f64> {
        py.detach(|| self.0.symmetry_defect(&s)).map_err(err)
    }
}

/// Constant-term pipeline against the shuffle side at each (s1, s2).
#[pyfunction]
fn ch_homomorphism_check<'py>(
    py: Python<'py>,
    f1: &PyLogGaussian,
    f2: &PyLogGaussian,
    samples: Vec<(C, C)>,
) -> PyResult<Bound<'py, PyAny>> {
    let r = py.detach(|| ch::ch_homomorphism_check(&f1.0, &f2.0, &samples, &ch::ChConfig::default())).map_err(err)?;
    to_py(py, &r)
}

/// Ordered set partitions of {1..n} by dimension; blocks are 1-based.
#[pyfunction]
fn faces(n: usize) -> PyResult<Vec<Vec<Vec<Vec<usize>>>>> {
    Ok(perm::faces(n).map_err(err)?.iter().map(|g| g.iter().map(|f| f.blocks()).collect()).collect())
}

/// Cohomology of the perturbed complex for an n×n kernel matrix; entries
/// with `zero_mask[i][j]` set are exact zeros.
#[pyfunction]
#[pyo3(signature = (entries, zero_mask, rank_tol = perm::RANK_TOL))]
fn cohomology_dims<'py>(
    py: Python<'py>,
    entries: Vec<Vec<C>>,
    zero_mask: Vec<Vec<bool>>,
    rank_tol: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let l = perm::PerturbedMatrix::new(entries, zero_mask).map_err(err)?;
    let h = perm::cohomology_dims(&perm::build_complex(&l).map_err(err)?, rank_tol).map_err(err)?;
    to_py(py, &h)
}

/// Cohomology for λ_ij = Λ(s_i - s_j), masking zeros known to `cache`.
#[pyfunction]
#[pyo3(signature = (points, cache, zero_tol = perm::ZERO_TOL, rank_tol = perm::RANK_TOL))]
fn cohomology_at_points<'py>(
    py: Python<'py>,
    points: Vec<C>,
    cache: &PyZeroCache,
    zero_tol: f64,
    rank_tol: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let l = perm::PerturbedMatrix::from_points(&points, &cache.0, zero_tol).map_err(err)?;
    let h = perm::cohomology_dims(&perm::build_complex(&l).map_err(err)?, rank_tol).map_err(err)?;
    let d = to_py(py, &h)?;
    d.set_item("zero_pairs", l.zero_pairs())?;
    d.set_item("wheels", perm::detect_wheels(&l))?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (cache, rho_index, c_samples, offsets))]
fn cubic_relation_scan<'py>(
    py: Python<'py>,
    cache: &PyZeroCache,
    rho_index: usize,
    c_samples: Vec<C>,
    offsets: Vec<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let r = perm::cubic_relation_scan(&cache.0, rho_index, &c_samples, &offsets, perm::ZERO_TOL, perm::RANK_TOL)
        .map_err(err)?;
    to_py(py, &r)
}

/// Runs an experiment from its JSON configuration and returns the report.
#[pyfunction]
fn run_experiment<'py>(py: Python<'py>, config: &str) -> PyResult<Bound<'py, PyAny>> {
    let cfg: cli::ExperimentConfig =
        serde_json::from_str(config).map_err(|e| HallzetaError::new_err(format!("config: {e}")))?;
    cfg.validate().map_err(HallzetaError::new_err)?;
    let report = py.detach(|| cli::run(&cfg));
    to_py(py, &report)
}

#[pymodule]
#[pyo3(name = "hallzeta")]
fn hallzeta_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("HallzetaError", m.py().get_type::<HallzetaError>())?;
    m.add_class::<PyZeroCache>()?;
    m.add_class::<PyGramBundle>()?;
    m.add_class::<PyLogGaussian>()?;
    m.add_class::<PyEvaluator>()?;
    m.add_function(wrap_pyfunction!(zeta, m)?)?;
    m.add_function(wrap_pyfunction!(zeta_star, m)?)?;
    m.add_function(wrap_pyfunction!(phi, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_big, m)?)?;
    m.add_function(wrap_pyfunction!(theta, m)?)?;
    m.add_function(wrap_pyfunction!(find_zeta_zeros, m)?)?;
    m.add_function(wrap_pyfunction!(hall_product_11, m)?)?;
    m.add_function(wrap_pyfunction!(eisenstein_hall_product, m)?)?;
    m.add_function(wrap_pyfunction!(eisenstein_maass, m)?)?;
    m.add_function(wrap_pyfunction!(zeta_star_coefficient, m)?)?;
    m.add_function(wrap_pyfunction!(ch_homomorphism_check, m)?)?;
    m.add_function(wrap_pyfunction!(faces, m)?)?;
    m.add_function(wrap_pyfunction!(cohomology_dims, m)?)?;
    m.add_function(wrap_pyfunction!(cohomology_at_points, m)?)?;
    m.add_function(wrap_pyfunction!(cubic_relation_scan, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}

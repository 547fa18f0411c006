//! Python bindings: frequency systems, counting, saddle points, Fock-space
//! operators, τ_E and thermal states, plus the experiment runner.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::sync::Arc;

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use kronlab::config::{Experiment, ExperimentConfig};
use kronlab_core::apalgebra::{FourierIndex, TrigPolynomial};
use kronlab_core::fock::{FockSpace, Statistics};
use kronlab_core::frequencies::{FrequencySystem, SystemKind};
use kronlab_core::kms::{self, ThermalContext};
use kronlab_core::sparse::SparseOperator;
use kronlab_core::{counting, ergodic, tauber};

fn err(e: impl Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "FrequencySystem", module = "kronlab_py", frozen)]
struct PyFrequencySystem {
    inner: Arc<FrequencySystem>,
}

#[pymethods]
impl PyFrequencySystem {
    /// First `count` frequencies of a system given as e.g. "powerlaw:A=1,alpha=1.5".
    #[staticmethod]
    fn generate(system: &str, count: usize) -> PyResult<Self> {
        let kind: SystemKind = system.parse().map_err(err)?;
        let inner = FrequencySystem::generate(kind, count).map_err(err)?;
        Ok(Self { inner: Arc::new(inner) })
    }

    /// Shortest prefix whose largest frequency exceeds `bound`.
    #[staticmethod]
    fn covering(system: &str, bound: f64) -> PyResult<Self> {
        let kind: SystemKind = system.parse().map_err(err)?;
        let inner = FrequencySystem::covering(kind, bound).map_err(err)?;
        Ok(Self { inner: Arc::new(inner) })
    }

    #[staticmethod]
    fn explicit(omegas: Vec<f64>) -> Self {
        Self {
            inner: Arc::new(FrequencySystem::explicit(omegas)),
        }
    }

    #[getter]
    fn omegas(&self) -> Vec<f64> {
        self.inner.omegas().to_vec()
    }

    #[getter]
    fn kind(&self) -> String {
        self.inner.kind().to_string()
    }

    fn axioms_pass(&self) -> bool {
        self.inner.check_axioms().all_checkable_pass()
    }

    fn __len__(&self) -> usize {
        self.inner.count()
    }

    fn __repr__(&self) -> String {
        format!("FrequencySystem({}, {} modes)", self.inner.kind(), self.inner.count())
    }
}

#[pyclass(name = "TrigPolynomial", module = "kronlab_py", frozen)]
struct PyTrigPolynomial {
    inner: TrigPolynomial,
}

#[pymethods]
impl PyTrigPolynomial {
    /// Terms are (index, coefficient) with index a list of (mode, power) pairs, modes 0-based.
    #[new]
    fn new(sys: &PyFrequencySystem, terms: Vec<(Vec<(usize, i64)>, Complex64)>) -> Self {
        let inner = TrigPolynomial::from_terms(
            sys.inner.clone(),
            terms.into_iter().map(|(k, c)| (FourierIndex::from_pairs(k), c)),
        );
        Self { inner }
    }

    fn bohr_mean(&self) -> Complex64 {
        self.inner.bohr_mean()
    }

    fn evaluate(&self, x: f64) -> Complex64 {
        self.inner.evaluate(x)
    }

    fn kronecker_flow(&self, t: f64) -> Self {
        Self {
            inner: self.inner.kronecker_flow(t),
        }
    }

    fn __mul__(&self, other: &Self) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.multiply(&other.inner).map_err(err)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

#[pyclass(name = "Operator", module = "kronlab_py", frozen)]
struct PyOperator {
    inner: SparseOperator,
}

#[pymethods]
impl PyOperator {
    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn nnz(&self) -> usize {
        self.inner.nnz()
    }

    fn get(&self, row: usize, col: usize) -> PyResult<Complex64> {
        if row >= self.inner.dim() || col >= self.inner.dim() {
            return Err(PyValueError::new_err("index out of range"));
        }
        Ok(self.inner.get(row, col))
    }

    /// Rows of complex entries.
    fn to_dense(&self) -> Vec<Vec<Complex64>> {
        let d = self.inner.dim();
        (0..d).map(|r| (0..d).map(|c| self.inner.get(r, c)).collect()).collect()
    }

    fn adjoint(&self) -> Self {
        Self {
            inner: self.inner.adjoint(),
        }
    }

    fn max_abs(&self) -> f64 {
        self.inner.max_abs()
    }

    fn __matmul__(&self, other: &Self) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.mul(&other.inner).map_err(err)?,
        })
    }

    fn __add__(&self, other: &Self) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.add(&other.inner).map_err(err)?,
        })
    }

    fn __sub__(&self, other: &Self) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.sub(&other.inner).map_err(err)?,
        })
    }

    fn commutator(&self, other: &Self) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.commutator(&other.inner).map_err(err)?,
        })
    }
}

#[pyclass(name = "FockSpace", module = "kronlab_py", frozen)]
struct PyFockSpace {
    inner: FockSpace,
}

fn statistics(name: &str) -> PyResult<Statistics> {
    match name {
        "boson" => Ok(Statistics::Boson),
        "fermion" => Ok(Statistics::Fermion),
        "graded" => Ok(Statistics::Graded),
        other => Err(PyValueError::new_err(format!("unknown statistics {other:?}"))),
    }
}

impl PyFockSpace {
    fn wrap(&self, inner: SparseOperator) -> PyOperator {
        PyOperator { inner }
    }
}

#[pymethods]
impl PyFockSpace {
    /// Bosonic space spanned by the lattice points of energy at most `energy`.
    #[staticmethod]
    fn energy_cut(sys: &PyFrequencySystem, energy: f64) -> PyResult<Self> {
        Ok(Self {
            inner: FockSpace::energy_cut(&sys.inner, energy).map_err(err)?,
        })
    }

    /// Tensor-product space with occupations up to `cutoff`; statistics is
    /// "boson", "fermion" or "graded".
    #[staticmethod]
    fn occupancy(statistics_name: &str, omegas: Vec<f64>, cutoff: u32) -> PyResult<Self> {
        Ok(Self {
            inner: FockSpace::occupancy(statistics(statistics_name)?, omegas, cutoff).map_err(err)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn energies(&self) -> Vec<f64> {
        self.inner.energies().to_vec()
    }

    fn manifest(&self) -> Vec<String> {
        self.inner.manifest()
    }

    fn identity(&self) -> PyOperator {
        self.wrap(self.inner.identity())
    }

    fn hamiltonian(&self) -> PyOperator {
        self.wrap(self.inner.hamiltonian())
    }

    fn grading(&self) -> PyOperator {
        self.wrap(self.inner.grading())
    }

    fn evolution(&self, t: f64) -> PyOperator {
        self.wrap(self.inner.evolution(t))
    }

    /// (a, a*) for a bosonic mode.
    fn boson_ops(&self, mode: usize) -> PyResult<(PyOperator, PyOperator)> {
        let (a, ad) = self.inner.boson_ops(mode).map_err(err)?;
        Ok((self.wrap(a), self.wrap(ad)))
    }

    /// (b, b*) for a fermionic mode.
    fn fermion_ops(&self, mode: usize) -> PyResult<(PyOperator, PyOperator)> {
        let (b, bd) = self.inner.fermion_ops(mode).map_err(err)?;
        Ok((self.wrap(b), self.wrap(bd)))
    }

    fn toeplitz(&self, f: &PyTrigPolynomial) -> PyResult<PyOperator> {
        Ok(self.wrap(self.inner.toeplitz(&f.inner).map_err(err)?))
    }

    fn supercharge(&self, k: usize) -> PyResult<PyOperator> {
        Ok(self.wrap(self.inner.supercharge(k).map_err(err)?))
    }

    fn random_operator(&self, seed: u64, nnz: usize, parity: Option<u32>) -> PyOperator {
        let mut rng = kms::seeded_rng(seed);
        self.wrap(kms::random_operator(&self.inner, &mut rng, nnz, parity))
    }
}

#[pyclass(name = "ThermalState", module = "kronlab_py", frozen)]
struct PyThermalState {
    inner: ThermalContext,
}

#[pymethods]
impl PyThermalState {
    #[new]
    fn new(space: &PyFockSpace, beta: f64) -> PyResult<Self> {
        Ok(Self {
            inner: ThermalContext::new(space.inner.clone(), beta).map_err(err)?,
        })
    }

    fn gibbs(&self, a: &PyOperator) -> PyResult<Complex64> {
        self.inner.gibbs(&a.inner).map_err(err)
    }

    fn skms(&self, a: &PyOperator) -> PyResult<Complex64> {
        self.inner.skms(&a.inner).map_err(err)
    }

    fn kms_defect(&self, a: &PyOperator, b: &PyOperator) -> PyResult<f64> {
        self.inner.kms_check(&a.inner, &b.inner).map_err(err)
    }

    fn twisted_kms_defect(&self, a: &PyOperator, b: &PyOperator) -> PyResult<f64> {
        self.inner.twisted_kms_check(&a.inner, &b.inner).map_err(err)
    }

    fn witten_index(&self) -> f64 {
        self.inner.witten_index()
    }
}

/// N(E), vacuum included.
#[pyfunction]
fn count_n(sys: &PyFrequencySystem, energy: f64) -> PyResult<u64> {
    Ok(counting::count_n_exact(&sys.inner, energy).map_err(err)?.count)
}

#[pyfunction]
fn window_ratio(sys: &PyFrequencySystem, energy: f64, delta: f64) -> PyResult<f64> {
    counting::window_ratio(&sys.inner, energy, delta).map_err(err)
}

/// Distinct energies up to E with multiplicities.
#[pyfunction]
fn spectrum(sys: &PyFrequencySystem, energy: f64) -> PyResult<Vec<(f64, u64)>> {
    counting::spectrum_up_to(&sys.inner, energy).map_err(err)
}

/// φ(s) = log Σ e^{−sλ} over the spectrum.
#[pyfunction]
fn phi(sys: &PyFrequencySystem, s: f64) -> PyResult<f64> {
    tauber::PhiEvaluator::new(&sys.inner).phi(s).map_err(err)
}

#[pyfunction]
fn solve_saddle<'py>(py: Python<'py>, sys: &PyFrequencySystem, energy: f64) -> PyResult<Bound<'py, PyDict>> {
    let r = tauber::solve_saddle(&tauber::PhiEvaluator::new(&sys.inner), energy).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("sigma", r.sigma)?;
    d.set_item("phi", r.phi)?;
    d.set_item("phi2", r.phi2)?;
    d.set_item("ln_n_tilde", r.ln_n_tilde)?;
    d.set_item("n_tilde", r.n_tilde)?;
    d.set_item("residual", r.residual())?;
    Ok(d)
}

/// Rows (E, N, Ñ, N/Ñ).
#[pyfunction]
fn asymptotic_vs_exact(sys: &PyFrequencySystem, grid: Vec<f64>) -> PyResult<Vec<(f64, u64, f64, f64)>> {
    let rows = tauber::asymptotic_vs_exact(&sys.inner, &grid).map_err(err)?;
    Ok(rows.iter().map(|r| (r.energy, r.n_exact, r.n_tilde, r.ratio)).collect())
}

/// Normalized trace over the states of energy at most E.
#[pyfunction]
fn tau_e(space: &PyFockSpace, a: &PyOperator, energy: f64) -> PyResult<Complex64> {
    ergodic::tau_e(&space.inner, &a.inner, energy).map_err(err)
}

#[pyfunction]
fn time_average(space: &PyFockSpace, a: &PyOperator, m: f64) -> PyResult<PyOperator> {
    Ok(PyOperator {
        inner: ergodic::time_average(&space.inner, &a.inner, m).map_err(err)?,
    })
}

/// Runs a named experiment in memory. Returns (pass, results as JSON text, table as CSV text).
#[pyfunction]
#[pyo3(signature = (name, options=None))]
fn run_experiment(name: &str, options: Option<BTreeMap<String, String>>) -> PyResult<(bool, String, String)> {
    let experiment: Experiment = name.parse().map_err(err)?;
    let options = options.unwrap_or_default();
    let flags: Vec<(&str, &str)> = options.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
    let cfg = ExperimentConfig::from_flags(experiment, &flags).map_err(err)?;
    let out = kronlab::experiments::run_experiment(&cfg).map_err(err)?;
    let json = serde_json::to_string(&out.results).map_err(err)?;
    Ok((out.pass, json, out.table.to_csv()))
}

#[pymodule]
fn kronlab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFrequencySystem>()?;
    m.add_class::<PyTrigPolynomial>()?;
    m.add_class::<PyOperator>()?;
    m.add_class::<PyFockSpace>()?;
    m.add_class::<PyThermalState>()?;
    m.add_function(wrap_pyfunction!(count_n, m)?)?;
    m.add_function(wrap_pyfunction!(window_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(phi, m)?)?;
    m.add_function(wrap_pyfunction!(solve_saddle, m)?)?;
    m.add_function(wrap_pyfunction!(asymptotic_vs_exact, m)?)?;
    m.add_function(wrap_pyfunction!(tau_e, m)?)?;
    m.add_function(wrap_pyfunction!(time_average, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}

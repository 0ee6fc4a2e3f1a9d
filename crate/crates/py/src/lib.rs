//! Python bindings: the core types (states, instances) and operations
//! (Gaussian machinery, generators, reductions, experiment driver) exposed
//! as the `dihedral_bridge_py` extension module.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use std::collections::BTreeMap;

use dihedral_core::edcp::{
    gen_decisional_null, gen_edcp, gen_lwe, verify_edcp_state, EdcpParams, LweInstance, LweParams,
};
use dihedral_core::experiments::{run, Experiment, RunConfig};
use dihedral_core::gaussian::{self, GaussianParam, WeightFn};
use dihedral_core::oracles;
use dihedral_core::qary::{lambda1_inf, lambda1_l2, QaryBasisSpec};
use dihedral_core::reductions;
use dihedral_core::rng::{rng_from_seed, SimRng};
use dihedral_core::statevector::{Direction, SparseState};

fn err(e: dihedral_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Deterministic random stream; every probabilistic operation takes one.
#[pyclass(name = "SeededRng")]
struct PySeededRng {
    inner: SimRng,
}

#[pymethods]
impl PySeededRng {
    #[new]
    fn new(seed: u64) -> Self {
        Self { inner: rng_from_seed(seed) }
    }
}

/// Sparse statevector over one bounded integer register and `Z_N` registers.
#[pyclass(name = "State", skip_from_py_object)]
#[derive(Clone)]
struct PyState {
    inner: SparseState,
    params: EdcpParams,
}

impl PyState {
    fn wrap(inner: SparseState, params: EdcpParams) -> Self {
        Self { inner, params }
    }
}

#[pymethods]
impl PyState {
    fn support_len(&self) -> usize {
        self.inner.support_len()
    }

    fn norm(&self) -> f64 {
        self.inner.norm()
    }

    /// Deterministic text listing `label : re im`, labels sorted.
    fn dump(&self) -> String {
        self.inner.dump()
    }

    /// Support labels with complex amplitudes as `(label, re, im)` rows.
    fn amplitudes(&self) -> Vec<(Vec<i64>, f64, f64)> {
        self.inner.iter().map(|(l, a)| (l.clone(), a.re, a.im)).collect()
    }

    fn l2_distance(&self, other: &PyState) -> PyResult<f64> {
        self.inner.l2_distance(&other.inner).map_err(err)
    }

    /// Forward (or inverse) QFT over `Z_N` on the given register.
    fn qft(&self, register: usize, inverse: bool) -> PyResult<PyState> {
        let dir = if inverse { Direction::Inverse } else { Direction::Forward };
        Ok(PyState::wrap(self.inner.clone().qft_mod(register, dir).map_err(err)?, self.params.clone()))
    }

    /// Born-rule measurement of one register; returns
    /// `(value, probability, collapsed_state)`.
    fn measure(
        &self,
        register: usize,
        mut rng: PyRefMut<'_, PySeededRng>,
    ) -> PyResult<(Vec<i64>, f64, PyState)> {
        let out = self.inner.clone().measure(register, &mut rng.inner).map_err(err)?;
        Ok((out.value, out.probability, PyState::wrap(out.collapsed, self.params.clone())))
    }
}

/// A planted LWE instance.
#[pyclass(name = "LweInstance", skip_from_py_object)]
#[derive(Clone)]
struct PyLweInstance {
    inner: LweInstance,
}

#[pymethods]
impl PyLweInstance {
    #[getter]
    fn a(&self) -> Vec<Vec<u64>> {
        self.inner.a.clone()
    }

    #[getter]
    fn b(&self) -> Vec<u64> {
        self.inner.b.clone()
    }

    /// Ground-truth secret (test use only).
    #[getter]
    fn s0(&self) -> Vec<u64> {
        self.inner.s0.clone()
    }

    /// Ground-truth error vector (test use only).
    #[getter]
    fn e0(&self) -> Vec<i64> {
        self.inner.e0.clone()
    }

    fn samples(&self) -> Vec<(Vec<u64>, u64)> {
        self.inner.samples()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json_string(&self.inner)
    }
}

fn serde_json_string<T: serde::Serialize>(value: &T) -> PyResult<String> {
    serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// A planted EDCP instance with its prepared states.
#[pyclass(name = "EdcpInstance")]
struct PyEdcpInstance {
    params: EdcpParams,
    #[pyo3(get)]
    secret: Vec<u64>,
    #[pyo3(get)]
    offsets: Vec<Vec<u64>>,
    states: Vec<SparseState>,
}

#[pymethods]
impl PyEdcpInstance {
    fn states(&self) -> Vec<PyState> {
        self.states.iter().map(|s| PyState::wrap(s.clone(), self.params.clone())).collect()
    }

    fn verify_state(&self, index: usize) -> bool {
        verify_edcp_state(&self.states[index], &self.params, &self.secret, &self.offsets[index])
    }
}

#[pyfunction]
fn rho(r: f64, x: Vec<f64>) -> PyResult<f64> {
    gaussian::rho(r, &x).map_err(err)
}

#[pyfunction]
fn rho_sum(r: f64, b: u64) -> f64 {
    gaussian::rho_sum(r, b)
}

#[pyfunction]
fn tail_ratio(r: f64, kappa: u32) -> PyResult<f64> {
    Ok(gaussian::tail_ratio(&GaussianParam::new(r, kappa).map_err(err)?))
}

#[pyfunction]
fn tail_bound(r: f64, kappa: u32) -> f64 {
    gaussian::tail_bound(r, kappa)
}

#[pyfunction]
fn poisson_check(r: f64, u: f64, scale: f64) -> PyResult<(f64, f64)> {
    gaussian::poisson_check(r, u, scale).map_err(err)
}

#[pyfunction]
fn sample_discrete_gaussian(
    r: f64,
    kappa: u32,
    count: usize,
    mut rng: PyRefMut<'_, PySeededRng>,
) -> PyResult<Vec<i64>> {
    let g = GaussianParam::new(r, kappa).map_err(err)?;
    let sampler = gaussian::DiscreteGaussian::new(g);
    Ok((0..count).map(|_| sampler.sample(&mut rng.inner)).collect())
}

/// Exact first minima of `L_q(A)`: `(lambda_inf, lambda_l2, witness)`.
#[pyfunction]
fn lattice_minima(a: Vec<Vec<u64>>, q: u64) -> PyResult<(u64, f64, Option<Vec<u64>>)> {
    let spec = QaryBasisSpec::new(a, q).map_err(err)?;
    let inf = lambda1_inf(&spec).map_err(err)?;
    let l2 = lambda1_l2(&spec).map_err(err)?;
    Ok((inf.lambda1_inf, l2.lambda1_l2, inf.witness))
}

#[pyfunction]
fn ball_intersection_ratio(
    m: usize,
    radius: f64,
    shift: Vec<f64>,
    denom: u64,
    q: u64,
    mc_trials: u64,
    mut rng: PyRefMut<'_, PySeededRng>,
) -> PyResult<f64> {
    reductions::ball_intersection_ratio(m, radius, &shift, denom, q, mc_trials, &mut rng.inner)
        .map_err(err)
}

#[pyfunction]
fn gen_lwe_instance(
    n: usize,
    q: u64,
    alpha: f64,
    m: usize,
    mut rng: PyRefMut<'_, PySeededRng>,
) -> PyResult<PyLweInstance> {
    let params = LweParams::new(n, q, alpha, m).map_err(err)?;
    Ok(PyLweInstance { inner: gen_lwe(&params, &mut rng.inner).map_err(err)? })
}

fn edcp_params(n: usize, modulus: u64, r: f64, kappa: u32, ell: usize) -> PyResult<EdcpParams> {
    let dist = WeightFn::gaussian(r, kappa).map_err(err)?;
    EdcpParams::new(n, modulus, dist, ell).map_err(err)
}

#[pyfunction]
fn gen_edcp_instance(
    n: usize,
    modulus: u64,
    r: f64,
    kappa: u32,
    ell: usize,
    mut rng: PyRefMut<'_, PySeededRng>,
) -> PyResult<PyEdcpInstance> {
    let params = edcp_params(n, modulus, r, kappa, ell)?;
    let inst = gen_edcp(&params, &mut rng.inner).map_err(err)?;
    Ok(PyEdcpInstance {
        params,
        secret: inst.secret,
        offsets: inst.offsets,
        states: inst.states,
    })
}

#[pyfunction]
fn gen_null_states(
    n: usize,
    modulus: u64,
    r: f64,
    kappa: u32,
    ell: usize,
    mut rng: PyRefMut<'_, PySeededRng>,
) -> PyResult<Vec<PyState>> {
    let params = edcp_params(n, modulus, r, kappa, ell)?;
    let states = gen_decisional_null(&params, &mut rng.inner).map_err(err)?;
    Ok(states.into_iter().map(|s| PyState::wrap(s, params.clone())).collect())
}

/// Converts one EDCP state into a classical LWE sample `(a', b)`.
#[pyfunction]
fn edcp_to_lwe_sample(
    state: &PyState,
    mut rng: PyRefMut<'_, PySeededRng>,
) -> PyResult<(Vec<u64>, u64)> {
    reductions::edcp_to_lwe_sample(state.inner.clone(), &state.params, &mut rng.inner)
        .map_err(err)
}

/// Brute-force maximum-likelihood LWE recovery:
/// `(secret, score, unique)`.
#[pyfunction]
fn solve_lwe(
    samples: Vec<(Vec<u64>, u64)>,
    n: usize,
    q: u64,
    r_err: f64,
) -> PyResult<(Option<Vec<u64>>, f64, bool)> {
    let v = oracles::solve_lwe_bruteforce(&samples, n, q, r_err).map_err(err)?;
    Ok((v.secret, v.score, v.unique))
}

/// Runs a named experiment and returns the JSON report.
#[pyfunction]
#[pyo3(signature = (name, seed, trials=None, params=None))]
fn run_experiment(
    name: &str,
    seed: u64,
    trials: Option<u64>,
    params: Option<BTreeMap<String, String>>,
) -> PyResult<String> {
    let experiment: Experiment = name.parse().map_err(err)?;
    let mut config = RunConfig::new(experiment, seed);
    if let Some(t) = trials {
        config.trials = t;
    }
    if let Some(p) = params {
        config.params = p;
    }
    let report = run(&config).map_err(err)?;
    report.to_json().map_err(err)
}

#[pyfunction]
fn experiment_names() -> Vec<&'static str> {
    Experiment::ALL.iter().map(|e| e.name()).collect()
}

#[pymodule]
fn dihedral_bridge_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySeededRng>()?;
    m.add_class::<PyState>()?;
    m.add_class::<PyLweInstance>()?;
    m.add_class::<PyEdcpInstance>()?;
    m.add_function(wrap_pyfunction!(rho, m)?)?;
    m.add_function(wrap_pyfunction!(rho_sum, m)?)?;
    m.add_function(wrap_pyfunction!(tail_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(tail_bound, m)?)?;
    m.add_function(wrap_pyfunction!(poisson_check, m)?)?;
    m.add_function(wrap_pyfunction!(sample_discrete_gaussian, m)?)?;
    m.add_function(wrap_pyfunction!(lattice_minima, m)?)?;
    m.add_function(wrap_pyfunction!(ball_intersection_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(gen_lwe_instance, m)?)?;
    m.add_function(wrap_pyfunction!(gen_edcp_instance, m)?)?;
    m.add_function(wrap_pyfunction!(gen_null_states, m)?)?;
    m.add_function(wrap_pyfunction!(edcp_to_lwe_sample, m)?)?;
    m.add_function(wrap_pyfunction!(solve_lwe, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(experiment_names, m)?)?;
    Ok(())
}

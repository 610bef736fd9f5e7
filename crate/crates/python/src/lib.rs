//! Python module `uev`: closed forms, finite-table updates, Monte Carlo
//! inference and consistency diagnostics from `uev-core`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use uev_core::consistency::{check_factorization_structure, consistency_report, PairedDraws};
use uev_core::density::{Density, Normal};
use uev_core::discrete;
use uev_core::gaussian;
use uev_core::montecarlo::{distributional_infer, jeffrey_mixture_infer, virtual_infer};
use uev_core::{
    BallDrop, BaseModel, DistributionalMode, EngineConfig, GaussianChain, LikelihoodRatios, UevError,
};

fn to_py(e: UevError) -> PyErr {
    match e {
        UevError::AllWeightsZero
        | UevError::InitOffSupport
        | UevError::NormalizerUnavailable
        | UevError::Component { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

#[pyclass(name = "GaussianParams", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyGaussianParams(uev_core::GaussianParams);

#[pymethods]
impl PyGaussianParams {
    #[new]
    fn new(mean: f64, variance: f64) -> PyResult<Self> {
        uev_core::GaussianParams::new(mean, variance).map(Self).map_err(to_py)
    }

    #[getter]
    fn mean(&self) -> f64 {
        self.0.mean()
    }

    #[getter]
    fn variance(&self) -> f64 {
        self.0.variance()
    }

    #[getter]
    fn sd(&self) -> f64 {
        self.0.sd()
    }

    fn pdf(&self, x: f64) -> f64 {
        self.0.pdf(x)
    }

    fn kl(&self, other: &PyGaussianParams) -> f64 {
        gaussian::gaussian_kl(&self.0, &other.0)
    }

    fn __repr__(&self) -> String {
        format!("GaussianParams(mean={}, variance={})", self.0.mean(), self.0.variance())
    }
}

fn chain(mu_x: f64, sigma_x: f64, sigma_yx: f64) -> PyResult<GaussianChain> {
    GaussianChain::from_sds(mu_x, sigma_x, sigma_yx).map_err(to_py)
}

#[pyfunction]
fn exact_posterior(mu_x: f64, sigma_x: f64, sigma_yx: f64, y: f64) -> PyResult<PyGaussianParams> {
    Ok(PyGaussianParams(gaussian::exact_posterior(&chain(mu_x, sigma_x, sigma_yx)?, y)))
}

#[pyfunction]
fn jeffrey_posterior_gaussian(
    mu_x: f64,
    sigma_x: f64,
    sigma_yx: f64,
    zeta: f64,
    sigma_q: f64,
) -> PyResult<PyGaussianParams> {
    gaussian::jeffrey_posterior_gaussian(&chain(mu_x, sigma_x, sigma_yx)?, zeta, sigma_q)
        .map(PyGaussianParams)
        .map_err(to_py)
}

#[pyfunction]
fn virtual_posterior_gaussian(
    mu_x: f64,
    sigma_x: f64,
    sigma_yx: f64,
    zeta: f64,
    sigma_qzeta: f64,
) -> PyResult<PyGaussianParams> {
    gaussian::virtual_posterior_gaussian(&chain(mu_x, sigma_x, sigma_yx)?, zeta, sigma_qzeta)
        .map(PyGaussianParams)
        .map_err(to_py)
}

#[pyfunction]
fn distributional_posterior_gaussian(
    mu_x: f64,
    sigma_x: f64,
    sigma_yx: f64,
    mu_q: f64,
    sigma_q: f64,
) -> PyResult<PyGaussianParams> {
    gaussian::distributional_posterior_gaussian(&chain(mu_x, sigma_x, sigma_yx)?, mu_q, sigma_q)
        .map(PyGaussianParams)
        .map_err(to_py)
}

/// Returns `(sigma_zeta_sq, mu_zeta_given_y, sigma_zeta_given_y_sq)`.
#[pyfunction]
fn consistency_construction(
    mu_x: f64,
    sigma_x: f64,
    sigma_yx: f64,
    sigma_q: f64,
    y: f64,
) -> PyResult<(f64, f64, f64)> {
    let w = gaussian::consistency_construction(&chain(mu_x, sigma_x, sigma_yx)?, sigma_q, y).map_err(to_py)?;
    Ok((w.sigma_zeta_sq, w.mu_zeta_given_y, w.sigma_zeta_given_y_sq))
}

#[pyfunction]
fn ball_drop_mean_time(g: f64, distance: f64) -> PyResult<f64> {
    gaussian::ball_drop_mean_time(g, distance).map_err(to_py)
}

#[pyclass(name = "JointTable", frozen)]
struct PyJointTable(uev_core::JointTable);

#[pymethods]
impl PyJointTable {
    /// `probs[k][j] = p(y_k, x_j)`.
    #[new]
    fn new(x_values: Vec<f64>, y_values: Vec<f64>, probs: Vec<Vec<f64>>) -> PyResult<Self> {
        uev_core::JointTable::new(x_values, y_values, probs).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text).map(Self).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn x_marginal(&self) -> Vec<f64> {
        self.0.x_marginal()
    }

    fn y_marginal(&self) -> Vec<f64> {
        self.0.y_marginal().to_vec()
    }

    fn jeffrey_update(&self, q: Vec<f64>) -> PyResult<Vec<f64>> {
        discrete::jeffrey_update_table(&self.0, &q).map_err(to_py)
    }

    fn virtual_update(&self, ratios: Vec<f64>) -> PyResult<Vec<f64>> {
        let r = LikelihoodRatios::new(ratios).map_err(to_py)?;
        discrete::virtual_update_table(&self.0, &r).map_err(to_py)
    }

    fn distributional_update(&self, q: Vec<f64>) -> PyResult<Vec<f64>> {
        discrete::distributional_update_table(&self.0, &q).map_err(to_py)
    }

    fn enumerate_extended_posterior(&self, zeta_lik: Vec<f64>) -> PyResult<Vec<f64>> {
        discrete::enumerate_extended_posterior(&self.0, &zeta_lik).map_err(to_py)
    }

    fn sequential_jeffrey(&self, qs: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        discrete::sequential_jeffrey(&self.0, &qs).map_err(to_py)
    }

    fn sequential_virtual(&self, ratio_list: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        let list = ratio_list
            .into_iter()
            .map(LikelihoodRatios::new)
            .collect::<Result<Vec<_>, _>>()
            .map_err(to_py)?;
        discrete::sequential_virtual(&self.0, &list).map_err(to_py)
    }

    fn q_from_ratios(&self, ratios: Vec<f64>) -> PyResult<Vec<f64>> {
        let r = LikelihoodRatios::new(ratios).map_err(to_py)?;
        discrete::q_from_ratios(&self.0, &r).map_err(to_py)
    }

    fn ratios_from_q(&self, q: Vec<f64>) -> PyResult<Vec<f64>> {
        discrete::ratios_from_q(&self.0, &q).map(Vec::from).map_err(to_py)
    }
}

#[pyclass(name = "WeightedSamples", frozen)]
struct PyWeightedSamples(uev_core::WeightedSamples);

#[pymethods]
impl PyWeightedSamples {
    fn __len__(&self) -> usize {
        self.0.len()
    }

    #[getter]
    fn mean(&self) -> f64 {
        self.0.mean()[0]
    }

    #[getter]
    fn sd(&self) -> f64 {
        self.0.sd()[0]
    }

    #[getter]
    fn standard_error(&self) -> f64 {
        self.0.standard_error()[0]
    }

    #[getter]
    fn ess(&self) -> f64 {
        self.0.ess()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.0.seed()
    }

    fn points(&self) -> Vec<f64> {
        self.0.points().to_vec()
    }

    fn log_weights(&self) -> Vec<f64> {
        self.0.log_weights().to_vec()
    }
}

fn engine(name: &str, n: usize, n_e: usize, step_scale: f64, seed: u64) -> PyResult<EngineConfig> {
    let cfg = match name {
        "snis" => EngineConfig::snis(n, seed),
        "mh" => EngineConfig::mh(n, step_scale, seed),
        other => return Err(PyValueError::new_err(format!("unknown engine {other:?}; use 'snis' or 'mh'"))),
    };
    Ok(cfg.with_n_e(n_e))
}

/// Evidence centred at `zeta` with spread `sigma_q`, under `method`.
fn infer(model: &BaseModel, method: &str, zeta: f64, sigma_q: f64, cfg: &EngineConfig) -> PyResult<PyWeightedSamples> {
    let q = Normal::new(zeta, sigma_q).map_err(to_py)?;
    let samples = match method {
        "jeffrey" => jeffrey_mixture_infer(model, &q, cfg),
        "virtual" => virtual_infer(model, &|y: &[f64]| q.log_pdf(y), cfg),
        "distributional" => distributional_infer(model, &q, cfg, DistributionalMode::Pseudo, None),
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown method {other:?}; use 'jeffrey', 'virtual' or 'distributional'"
            )))
        }
    };
    samples.map(PyWeightedSamples).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (method, mu_x, sigma_x, sigma_yx, zeta, sigma_q, n=10_000, n_e=256, seed=0, engine_name="snis", step_scale=0.5))]
#[allow(clippy::too_many_arguments)]
fn gaussian_infer(
    method: &str,
    mu_x: f64,
    sigma_x: f64,
    sigma_yx: f64,
    zeta: f64,
    sigma_q: f64,
    n: usize,
    n_e: usize,
    seed: u64,
    engine_name: &str,
    step_scale: f64,
) -> PyResult<PyWeightedSamples> {
    let model = BaseModel::gaussian_chain(chain(mu_x, sigma_x, sigma_yx)?);
    infer(&model, method, zeta, sigma_q, &engine(engine_name, n, n_e, step_scale, seed)?)
}

#[pyfunction]
#[pyo3(signature = (method, t_hat=0.43, sigma_q=0.03, sigma_model=0.005, distance=1.0, prior_mean=9.81, prior_sd=2.0, n=10_000, n_e=256, seed=0, engine_name="snis", step_scale=1.0))]
#[allow(clippy::too_many_arguments)]
fn ball_drop_infer(
    method: &str,
    t_hat: f64,
    sigma_q: f64,
    sigma_model: f64,
    distance: f64,
    prior_mean: f64,
    prior_sd: f64,
    n: usize,
    n_e: usize,
    seed: u64,
    engine_name: &str,
    step_scale: f64,
) -> PyResult<PyWeightedSamples> {
    let model = BaseModel::ball_drop(BallDrop {
        distance,
        sigma_model,
        prior_mean,
        prior_sd,
    })
    .map_err(to_py)?;
    infer(&model, method, t_hat, sigma_q, &engine(engine_name, n, n_e, step_scale, seed)?)
}

/// Sampled consistency report for `q(y | zeta) = N(zeta, sigma_q^2)` against a
/// Gaussian chain, as a JSON string.
#[pyfunction]
#[pyo3(signature = (mu_x, sigma_x, sigma_yx, sigma_q, m=2_000, k=50, seed=0))]
fn gaussian_consistency_report(
    mu_x: f64,
    sigma_x: f64,
    sigma_yx: f64,
    sigma_q: f64,
    m: usize,
    k: usize,
    seed: u64,
) -> PyResult<String> {
    let c = chain(mu_x, sigma_x, sigma_yx)?;
    let zeta_var = gaussian::consistency_construction(&c, sigma_q, mu_x)
        .map(|w| w.sigma_zeta_sq)
        .unwrap_or(c.predictive_variance());
    let zeta = Normal::new(mu_x, zeta_var.sqrt()).map_err(to_py)?;
    let q = move |z: &[f64]| Ok(Box::new(Normal::new(z[0], sigma_q)?) as Box<dyn Density>);
    let model = BaseModel::gaussian_chain(c);
    let draws = PairedDraws::from_model(&model, &zeta, &q, m, k, seed).map_err(to_py)?;
    let report = consistency_report(&draws, check_factorization_structure(&[vec![0]], &[vec![0]], true))
        .map_err(to_py)?;
    serde_json::to_string(&report).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pymodule]
fn uev(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGaussianParams>()?;
    m.add_class::<PyJointTable>()?;
    m.add_class::<PyWeightedSamples>()?;
    m.add_function(wrap_pyfunction!(exact_posterior, m)?)?;
    m.add_function(wrap_pyfunction!(jeffrey_posterior_gaussian, m)?)?;
    m.add_function(wrap_pyfunction!(virtual_posterior_gaussian, m)?)?;
    m.add_function(wrap_pyfunction!(distributional_posterior_gaussian, m)?)?;
    m.add_function(wrap_pyfunction!(consistency_construction, m)?)?;
    m.add_function(wrap_pyfunction!(ball_drop_mean_time, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_infer, m)?)?;
    m.add_function(wrap_pyfunction!(ball_drop_infer, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_consistency_report, m)?)?;
    Ok(())
}


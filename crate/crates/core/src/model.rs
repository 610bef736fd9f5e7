//! Base models, evidence values and the dispatch that routes each kind of
//! evidence to its update rule:
//!
//! | evidence | rule |
//! |---|---|
//! | exact `y` | `p(x | y)` |
//! | type I, `q(y | zeta)` | Jeffrey's rule, `E_q[p(x | y)]` |
//! | type II, `q(y)` given the latent | distributional evidence, `p(x) f(y ~ D_q | x)` |
//! | type III, `q(zeta | y)` | virtual evidence, `∫ q(zeta | y) p(y, x) dy` |

use std::fmt;
use std::sync::Arc;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::density::{normal_log_pdf, Categorical, Density, Normal, PointMass, PositiveNormal, Support};
use crate::discrete::{self, JointTable, LikelihoodRatios};
use crate::error::{Result, UevError};
use crate::gaussian::{self, BallDrop, GaussianChain, GaussianParams};
use crate::montecarlo::{self, DistributionalMode, Engine, EngineConfig, WeightedSamples};

pub type LikelihoodFn = dyn Fn(&[f64]) -> Box<dyn Density> + Send + Sync;

/// Recognized closed-form families; `Generic` models only run Monte Carlo.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelFamily {
    Generic,
    GaussianChain(GaussianChain),
    BallDrop(BallDrop),
    Finite(JointTable),
}

/// Prior `p(x)` and likelihood `p(y | x)`.
#[derive(Clone)]
pub struct BaseModel {
    prior: Arc<dyn Density>,
    likelihood: Arc<LikelihoodFn>,
    dim_y: usize,
    family: ModelFamily,
}

impl fmt::Debug for BaseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BaseModel")
            .field("prior", &self.prior)
            .field("dim_x", &self.dim_x())
            .field("dim_y", &self.dim_y)
            .field("family", &self.family)
            .finish()
    }
}

/// Likelihood returned for latent points off the prior's support.
#[derive(Debug)]
struct OffSupport {
    dim: usize,
}

impl Density for OffSupport {
    fn dim(&self) -> usize {
        self.dim
    }

    fn support(&self) -> Support {
        Support::FiniteSet(Vec::new())
    }

    fn log_pdf(&self, _x: &[f64]) -> f64 {
        f64::NEG_INFINITY
    }

    fn sample(&self, _rng: &mut dyn RngCore) -> Vec<f64> {
        vec![f64::NAN; self.dim]
    }
}

impl BaseModel {
    pub fn new(prior: Arc<dyn Density>, likelihood: Arc<LikelihoodFn>, dim_y: usize) -> Result<Self> {
        if dim_y == 0 || prior.dim() == 0 {
            return Err(UevError::InvalidParameter("model dimensions must be positive".into()));
        }
        Ok(Self {
            prior,
            likelihood,
            dim_y,
            family: ModelFamily::Generic,
        })
    }

    pub fn gaussian_chain(chain: GaussianChain) -> Self {
        let prior = Normal::new(chain.prior.mean(), chain.prior.sd()).expect("valid chain prior");
        let sd = chain.obs_noise_sd();
        let likelihood: Arc<LikelihoodFn> = Arc::new(move |x: &[f64]| -> Box<dyn Density> {
            match Normal::new(x[0], sd) {
                Ok(n) => Box::new(n),
                Err(_) => Box::new(OffSupport { dim: 1 }),
            }
        });
        Self {
            prior: Arc::new(prior),
            likelihood,
            dim_y: 1,
            family: ModelFamily::GaussianChain(chain),
        }
    }

    /// g with a positive-truncated normal prior (point mass if `prior_sd == 0`),
    /// fall time `t | g ~ N(sqrt(2 d / g), sigma_model^2)`.
    pub fn ball_drop(cfg: BallDrop) -> Result<Self> {
        cfg.validate()?;
        let prior: Arc<dyn Density> = if cfg.prior_sd == 0.0 {
            Arc::new(PointMass::scalar(cfg.prior_mean)?)
        } else {
            Arc::new(PositiveNormal::new(cfg.prior_mean, cfg.prior_sd)?)
        };
        let likelihood: Arc<LikelihoodFn> = Arc::new(move |g: &[f64]| -> Box<dyn Density> {
            match gaussian::ball_drop_mean_time(g[0], cfg.distance)
                .and_then(|t| Normal::new(t, cfg.sigma_model))
            {
                Ok(n) => Box::new(n),
                Err(_) => Box::new(OffSupport { dim: 1 }),
            }
        });
        Ok(Self {
            prior,
            likelihood,
            dim_y: 1,
            family: ModelFamily::BallDrop(cfg),
        })
    }

    /// Prior `p(x_j)` and likelihood `p(y_k | x_j)` read off a joint table.
    pub fn finite(joint: JointTable) -> Result<Self> {
        let prior = Categorical::new(joint.x_values().to_vec(), joint.x_marginal())?;
        let x_values = joint.x_values().to_vec();
        let y_values = joint.y_values().to_vec();
        let rows: Vec<Vec<f64>> = (0..x_values.len()).map(|j| joint.likelihood_row(j)).collect();
        let likelihood: Arc<LikelihoodFn> = Arc::new(move |x: &[f64]| -> Box<dyn Density> {
            match x_values.iter().position(|&v| v == x[0]) {
                Some(j) => Box::new(
                    Categorical::new(y_values.clone(), rows[j].clone()).expect("rows are normalized"),
                ),
                None => Box::new(OffSupport { dim: 1 }),
            }
        });
        Ok(Self {
            prior: Arc::new(prior),
            likelihood,
            dim_y: 1,
            family: ModelFamily::Finite(joint),
        })
    }

    pub fn prior(&self) -> &dyn Density {
        self.prior.as_ref()
    }

    pub fn likelihood(&self, x: &[f64]) -> Box<dyn Density> {
        (self.likelihood)(x)
    }

    pub fn dim_x(&self) -> usize {
        self.prior.dim()
    }

    pub fn dim_y(&self) -> usize {
        self.dim_y
    }

    pub fn family(&self) -> &ModelFamily {
        &self.family
    }

    /// `ln p(x) + ln p(y | x)`; `-inf` off the support.
    pub fn log_joint(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != self.dim_x() {
            return Err(UevError::DimensionMismatch {
                expected: self.dim_x(),
                got: x.len(),
                context: "latent point",
            });
        }
        if y.len() != self.dim_y {
            return Err(UevError::DimensionMismatch {
                expected: self.dim_y,
                got: y.len(),
                context: "observable point",
            });
        }
        Ok(self.log_joint_unchecked(x, y))
    }

    pub(crate) fn log_joint_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        let lp = self.prior.log_pdf(x);
        if lp == f64::NEG_INFINITY || lp.is_nan() {
            return f64::NEG_INFINITY;
        }
        lp + self.likelihood(x).log_pdf(y)
    }

    /// Ancestral draw `x ~ p(x)`, `y ~ p(y | x)`.
    pub fn sample_joint(&self, rng: &mut dyn RngCore) -> (Vec<f64>, Vec<f64>) {
        let x = self.prior.sample(rng);
        let y = self.likelihood(&x).sample(rng);
        (x, y)
    }
}

pub type LogLikFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// Virtual likelihood `q(zeta | y)` as a function of y.
#[derive(Clone)]
pub enum VirtualLikelihood {
    /// `q(zeta | y) = N(zeta; y, sd^2)` for scalar y.
    Gaussian { zeta: f64, sd: f64 },
    /// `q(zeta | y_k) ∝ lambda_k` over a finite set of y values.
    Ratios {
        y_values: Vec<f64>,
        ratios: LikelihoodRatios,
    },
    Custom(Arc<LogLikFn>),
}

impl fmt::Debug for VirtualLikelihood {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Gaussian { zeta, sd } => f
                .debug_struct("Gaussian")
                .field("zeta", zeta)
                .field("sd", sd)
                .finish(),
            Self::Ratios { y_values, ratios } => f
                .debug_struct("Ratios")
                .field("y_values", y_values)
                .field("ratios", ratios)
                .finish(),
            Self::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl VirtualLikelihood {
    pub fn gaussian(zeta: f64, sd: f64) -> Result<Self> {
        Normal::new(zeta, sd)?;
        Ok(Self::Gaussian { zeta, sd })
    }

    pub fn log_lik(&self, y: &[f64]) -> f64 {
        match self {
            Self::Gaussian { zeta, sd } => normal_log_pdf(*zeta, y[0], *sd),
            Self::Ratios { y_values, ratios } => y_values
                .iter()
                .position(|&v| v == y[0])
                .map_or(f64::NEG_INFINITY, |k| ratios.as_slice()[k].ln()),
            Self::Custom(f) => f(y),
        }
    }
}

/// An uncertain (or exact) statement about the observable y.
#[derive(Clone, Debug)]
pub enum Evidence {
    Exact(Vec<f64>),
    /// Type I: `q(y | zeta)` caused by external evidence `zeta`.
    TypeI { q: Arc<dyn Density>, zeta: String },
    /// Type II: `q(y)` asserted for a particular value of the latent.
    TypeII { q: Arc<dyn Density> },
    /// Type III: a likelihood `q(zeta | y)`.
    TypeIII {
        likelihood: VirtualLikelihood,
        zeta: String,
    },
}

impl Evidence {
    pub fn tag(&self) -> &'static str {
        match self {
            Evidence::Exact(_) => "exact",
            Evidence::TypeI { .. } => "type-i",
            Evidence::TypeII { .. } => "type-ii",
            Evidence::TypeIII { .. } => "type-iii",
        }
    }

    pub fn rule(&self) -> &'static str {
        match self {
            Evidence::Exact(_) => "exact",
            Evidence::TypeI { .. } => "jeffrey",
            Evidence::TypeII { .. } => "distributional",
            Evidence::TypeIII { .. } => "virtual",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorTable {
    pub x_values: Vec<f64>,
    pub probs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "representation", rename_all = "kebab-case")]
pub enum Posterior {
    Analytic(GaussianParams),
    Table(PosteriorTable),
    Samples(WeightedSamples),
}

impl Posterior {
    pub fn mean(&self) -> Vec<f64> {
        match self {
            Posterior::Analytic(g) => vec![g.mean()],
            Posterior::Table(t) => vec![t.x_values.iter().zip(&t.probs).map(|(x, p)| x * p).sum()],
            Posterior::Samples(s) => s.mean(),
        }
    }

    pub fn variance(&self) -> Vec<f64> {
        match self {
            Posterior::Analytic(g) => vec![g.variance()],
            Posterior::Table(t) => {
                let m = self.mean()[0];
                vec![t.x_values.iter().zip(&t.probs).map(|(x, p)| p * (x - m) * (x - m)).sum()]
            }
            Posterior::Samples(s) => s.variance(),
        }
    }

    /// Monte Carlo standard error of the mean; zero for exact representations.
    pub fn standard_error(&self) -> Vec<f64> {
        match self {
            Posterior::Samples(s) => s.standard_error(),
            _ => vec![0.0; self.mean().len()],
        }
    }
}

fn check_dim(expected: usize, got: usize, context: &'static str) -> Result<()> {
    if expected != got {
        return Err(UevError::DimensionMismatch {
            expected,
            got,
            context,
        });
    }
    Ok(())
}

fn unsupported(engine: Engine, what: &str) -> UevError {
    UevError::UnsupportedCombination(format!("{engine:?} engine cannot handle {what}"))
}

/// Routes `evidence` to its update rule and runs it with the configured engine.
/// Deterministic in `(model, evidence, engine)`.
pub fn dispatch_infer(model: &BaseModel, evidence: &Evidence, engine: &EngineConfig) -> Result<Posterior> {
    engine.validate()?;
    match evidence {
        Evidence::Exact(y) => check_dim(model.dim_y(), y.len(), "exact observation")?,
        Evidence::TypeI { q, .. } | Evidence::TypeII { q } => {
            check_dim(model.dim_y(), q.dim(), "evidence density over y")?
        }
        Evidence::TypeIII { .. } => {}
    }
    match engine.engine {
        Engine::AnalyticGaussian => dispatch_analytic(model, evidence),
        Engine::DiscreteExact => dispatch_table(model, evidence),
        Engine::Snis | Engine::Mh => dispatch_monte_carlo(model, evidence, engine).map(Posterior::Samples),
    }
}

fn dispatch_analytic(model: &BaseModel, evidence: &Evidence) -> Result<Posterior> {
    let ModelFamily::GaussianChain(chain) = model.family() else {
        return Err(UevError::UnsupportedCombination(
            "analytic-gaussian engine needs a conjugate Gaussian chain model".into(),
        ));
    };
    let gaussian_q = |q: &Arc<dyn Density>| {
        if let Some(p) = q.as_point_mass() {
            return Ok((p[0], None));
        }
        q.as_gaussian()
            .map(|g| (g.mean(), Some(g.sd())))
            .ok_or_else(|| unsupported(Engine::AnalyticGaussian, "a non-Gaussian evidence density"))
    };
    let params = match evidence {
        Evidence::Exact(y) => gaussian::exact_posterior(chain, y[0]),
        Evidence::TypeI { q, .. } => match gaussian_q(q)? {
            (y, None) => gaussian::exact_posterior(chain, y),
            (m, Some(sd)) => gaussian::jeffrey_posterior_gaussian(chain, m, sd)?,
        },
        Evidence::TypeII { q } => match gaussian_q(q)? {
            (y, None) => gaussian::exact_posterior(chain, y),
            (m, Some(sd)) => gaussian::distributional_posterior_gaussian(chain, m, sd)?,
        },
        Evidence::TypeIII {
            likelihood: VirtualLikelihood::Gaussian { zeta, sd },
            ..
        } => gaussian::virtual_posterior_gaussian(chain, *zeta, *sd)?,
        Evidence::TypeIII { .. } => {
            return Err(unsupported(Engine::AnalyticGaussian, "a non-Gaussian virtual likelihood"))
        }
    };
    Ok(Posterior::Analytic(params))
}

fn finite_q(joint: &JointTable, q: &dyn Density) -> Result<Vec<f64>> {
    let mut out = vec![0.0; joint.y_values().len()];
    if let Some(p) = q.as_point_mass() {
        let k = joint
            .y_index(p[0])
            .ok_or_else(|| UevError::InvalidParameter(format!("y = {} is not in y_values", p[0])))?;
        out[k] = 1.0;
        return Ok(out);
    }
    let cat = q
        .as_categorical()
        .ok_or_else(|| unsupported(Engine::DiscreteExact, "a non-categorical evidence density"))?;
    for (v, p) in cat.values().iter().zip(cat.probs()) {
        let k = joint
            .y_index(*v)
            .ok_or_else(|| UevError::InvalidParameter(format!("y = {v} is not in y_values")))?;
        out[k] += p;
    }
    Ok(out)
}

fn dispatch_table(model: &BaseModel, evidence: &Evidence) -> Result<Posterior> {
    let ModelFamily::Finite(joint) = model.family() else {
        return Err(UevError::UnsupportedCombination(
            "discrete-exact engine needs a finite joint-table model".into(),
        ));
    };
    let probs = match evidence {
        Evidence::Exact(y) => {
            let k = joint
                .y_index(y[0])
                .ok_or_else(|| UevError::InvalidParameter(format!("y = {} is not in y_values", y[0])))?;
            joint.conditional_x_given_y(k).ok_or(UevError::ZeroMarginal { index: k })?
        }
        Evidence::TypeI { q, .. } => discrete::jeffrey_update_table(joint, &finite_q(joint, q.as_ref())?)?,
        Evidence::TypeII { q } => discrete::distributional_update_table(joint, &finite_q(joint, q.as_ref())?)?,
        Evidence::TypeIII { likelihood, .. } => {
            let ratios = match likelihood {
                VirtualLikelihood::Ratios { y_values, ratios } if y_values == joint.y_values() => ratios.clone(),
                other => LikelihoodRatios::new(
                    joint.y_values().iter().map(|y| other.log_lik(&[*y]).exp()).collect(),
                )?,
            };
            discrete::virtual_update_table(joint, &ratios)?
        }
    };
    Ok(Posterior::Table(PosteriorTable {
        x_values: joint.x_values().to_vec(),
        probs,
    }))
}

fn dispatch_monte_carlo(model: &BaseModel, evidence: &Evidence, engine: &EngineConfig) -> Result<WeightedSamples> {
    match evidence {
        Evidence::Exact(y) => montecarlo::condition(model, y, engine),
        Evidence::TypeI { q, .. } => montecarlo::jeffrey_mixture_infer(model, q.as_ref(), engine),
        Evidence::TypeII { q } => {
            montecarlo::distributional_infer(model, q.as_ref(), engine, DistributionalMode::Pseudo, None)
        }
        Evidence::TypeIII { likelihood, .. } => {
            montecarlo::virtual_infer(model, &|y: &[f64]| likelihood.log_lik(y), engine)
        }
    }
}

//! Closed-form posteriors for the scalar conjugate chain
//! `x ~ N(mu_x, sigma_x^2)`, `y | x ~ N(x, sigma_yx^2)`, and the ball-drop
//! forward model.

use serde::{Deserialize, Serialize};

use crate::density::LN_SQRT_2PI;
use crate::error::{Result, UevError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    mean: f64,
    variance: f64,
}

impl GaussianParams {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() || !(variance > 0.0) || !variance.is_finite() {
            return Err(UevError::InvalidParameter(format!(
                "gaussian needs finite mean and variance > 0, got ({mean}, {variance})"
            )));
        }
        Ok(Self { mean, variance })
    }

    pub fn from_sd(mean: f64, sd: f64) -> Result<Self> {
        Self::new(mean, sd * sd)
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn sd(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        let d = x - self.mean;
        -0.5 * d * d / self.variance - 0.5 * self.variance.ln() - LN_SQRT_2PI
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.log_pdf(x).exp()
    }
}

/// Prior `N(mu_x, sigma_x^2)` over x and likelihood `N(x, obs_noise_sd^2)` over y.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianChain {
    pub prior: GaussianParams,
    obs_noise_sd: f64,
}

impl GaussianChain {
    pub fn new(prior: GaussianParams, obs_noise_sd: f64) -> Result<Self> {
        if !(obs_noise_sd > 0.0) || !obs_noise_sd.is_finite() {
            return Err(UevError::InvalidParameter(format!(
                "observation noise sd must be > 0, got {obs_noise_sd}"
            )));
        }
        Ok(Self {
            prior,
            obs_noise_sd,
        })
    }

    /// Convenience constructor from `(mu_x, sigma_x, sigma_yx)`.
    pub fn from_sds(mu_x: f64, sigma_x: f64, sigma_yx: f64) -> Result<Self> {
        Self::new(GaussianParams::from_sd(mu_x, sigma_x)?, sigma_yx)
    }

    pub fn obs_noise_sd(&self) -> f64 {
        self.obs_noise_sd
    }

    pub fn obs_noise_var(&self) -> f64 {
        self.obs_noise_sd * self.obs_noise_sd
    }

    /// Marginal variance of y under the base model.
    pub fn predictive_variance(&self) -> f64 {
        self.prior.variance + self.obs_noise_var()
    }

    /// Posterior variance s^2 after one exact observation.
    fn conditional_variance(&self) -> f64 {
        1.0 / (1.0 / self.prior.variance + 1.0 / self.obs_noise_var())
    }

    /// `E[x | y] = a + b y`.
    fn affine_mean(&self) -> (f64, f64) {
        let s2 = self.conditional_variance();
        (
            s2 * self.prior.mean / self.prior.variance,
            s2 / self.obs_noise_var(),
        )
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(UevError::InvalidParameter(format!("{name} must be > 0, got {v}")))
    }
}

/// `p(x | y)` for an exact observation.
pub fn exact_posterior(chain: &GaussianChain, y: f64) -> GaussianParams {
    let s2 = chain.conditional_variance();
    let mean = s2 * (chain.prior.mean / chain.prior.variance + y / chain.obs_noise_var());
    GaussianParams {
        mean,
        variance: s2,
    }
}

/// Jeffrey's rule with `q(y | zeta) = N(zeta, sigma_q^2)`: the mixture
/// `E_q[p(x | y)]` is Gaussian because `E[x | y]` is affine in y.
pub fn jeffrey_posterior_gaussian(
    chain: &GaussianChain,
    zeta_mean: f64,
    sigma_q: f64,
) -> Result<GaussianParams> {
    positive("sigma_q", sigma_q)?;
    let s2 = chain.conditional_variance();
    let (a, b) = chain.affine_mean();
    GaussianParams::new(a + b * zeta_mean, s2 + b * b * sigma_q * sigma_q)
}

/// Virtual evidence with `q(zeta | y) = N(zeta; y, sigma_qzeta^2)`. Integrating
/// y out leaves zeta as a noisy observation of x with variance
/// `sigma_yx^2 + sigma_qzeta^2`.
pub fn virtual_posterior_gaussian(
    chain: &GaussianChain,
    zeta: f64,
    sigma_qzeta: f64,
) -> Result<GaussianParams> {
    positive("sigma_qzeta", sigma_qzeta)?;
    let noise = chain.obs_noise_var() + sigma_qzeta * sigma_qzeta;
    let v = 1.0 / (1.0 / chain.prior.variance + 1.0 / noise);
    GaussianParams::new(v * (chain.prior.mean / chain.prior.variance + zeta / noise), v)
}

/// Distributional evidence `y ~ N(mu_q, sigma_q^2)`. The pseudo-likelihood
/// `exp E_q[ln p(y|x)]` equals `p(y = mu_q | x)` up to an x-independent factor,
/// so `sigma_q` drops out.
pub fn distributional_posterior_gaussian(
    chain: &GaussianChain,
    mu_q: f64,
    sigma_q: f64,
) -> Result<GaussianParams> {
    positive("sigma_q", sigma_q)?;
    Ok(exact_posterior(chain, mu_q))
}

/// Explicit `p(zeta | y) = N(mu_zeta_given_y, sigma_zeta_given_y_sq)` under which
/// `q(y | zeta) = N(zeta, sigma_q^2)` is a conditional of an extended joint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyWitness {
    /// Marginal variance of zeta, `sigma_x^2 + sigma_yx^2 - sigma_q^2`.
    pub sigma_zeta_sq: f64,
    pub mu_zeta_given_y: f64,
    pub sigma_zeta_given_y_sq: f64,
}

pub fn consistency_construction(
    chain: &GaussianChain,
    sigma_q: f64,
    y: f64,
) -> Result<ConsistencyWitness> {
    positive("sigma_q", sigma_q)?;
    let q2 = sigma_q * sigma_q;
    let sigma_zeta_sq = chain.predictive_variance() - q2;
    if sigma_zeta_sq < 0.0 {
        return Err(UevError::InconsistentEvidence(format!(
            "var[y] = {:.6} < sigma_q^2 = {:.6}; no p(zeta|y) exists (sigma_zeta^2 = {:.6})",
            chain.predictive_variance(),
            q2,
            sigma_zeta_sq
        )));
    }
    let denom = sigma_zeta_sq + q2;
    Ok(ConsistencyWitness {
        sigma_zeta_sq,
        mu_zeta_given_y: (y * sigma_zeta_sq + chain.prior.mean * q2) / denom,
        sigma_zeta_given_y_sq: sigma_zeta_sq * q2 / denom,
    })
}

/// Fall time `sqrt(2 d / g)` for `d = g t^2 / 2`.
pub fn ball_drop_mean_time(g: f64, distance: f64) -> Result<f64> {
    if !(g > 0.0) || !(distance > 0.0) || !g.is_finite() || !distance.is_finite() {
        return Err(UevError::DomainError(format!(
            "ball drop needs g > 0 and distance > 0, got g = {g}, distance = {distance}"
        )));
    }
    Ok((2.0 * distance / g).sqrt())
}

/// KL(p || q) between two scalar Gaussians.
pub fn gaussian_kl(p: &GaussianParams, q: &GaussianParams) -> f64 {
    let d = p.mean - q.mean;
    let kl = 0.5 * (q.variance / p.variance).ln() + (p.variance + d * d) / (2.0 * q.variance)
        - 0.5;
    kl.max(0.0)
}

/// Ball-drop base model: `g ~ N(prior_mean, prior_sd^2)` truncated to g > 0
/// (a point mass when `prior_sd == 0`), `t | g ~ N(sqrt(2 d / g), sigma_model^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallDrop {
    pub distance: f64,
    pub sigma_model: f64,
    pub prior_mean: f64,
    pub prior_sd: f64,
}

impl Default for BallDrop {
    fn default() -> Self {
        Self {
            distance: 1.0,
            sigma_model: 0.005,
            prior_mean: 9.81,
            prior_sd: 2.0,
        }
    }
}

impl BallDrop {
    pub fn validate(&self) -> Result<()> {
        positive("distance", self.distance)?;
        positive("sigma_model", self.sigma_model)?;
        positive("prior_mean", self.prior_mean)?;
        if !(self.prior_sd >= 0.0) || !self.prior_sd.is_finite() {
            return Err(UevError::InvalidParameter(format!(
                "prior_sd must be >= 0, got {}",
                self.prior_sd
            )));
        }
        Ok(())
    }
}

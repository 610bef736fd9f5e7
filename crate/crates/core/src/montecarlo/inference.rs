use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::Density;
use crate::error::{Result, UevError};
use crate::model::BaseModel;
use crate::seed::{derive_seed, derive_seed2, rng_from_seed, streams};

use super::{mh, snis, Engine, EngineConfig, McmcRun, WeightedSamples};

const MAX_INIT_ATTEMPTS: usize = 10_000;

fn check_y_dim(model: &BaseModel, dim: usize, context: &'static str) -> Result<()> {
    if dim != model.dim_y() {
        return Err(UevError::DimensionMismatch {
            expected: model.dim_y(),
            got: dim,
            context,
        });
    }
    Ok(())
}

/// One engine run on an unnormalized target over x, using the prior as the
/// importance proposal or as the source of the MH starting point.
fn run_engine(
    model: &BaseModel,
    target: &dyn Fn(&[f64]) -> f64,
    config: &EngineConfig,
) -> Result<WeightedSamples> {
    let samples = match config.engine {
        Engine::Snis => snis(
            target,
            model.prior(),
            config.n,
            derive_seed(config.seed, streams::PROPOSAL),
        )?,
        Engine::Mh => {
            let mut rng = rng_from_seed(derive_seed(config.seed, streams::MH_INIT));
            let init = (0..MAX_INIT_ATTEMPTS)
                .map(|_| model.prior().sample(&mut rng))
                .find(|x| target(x).is_finite())
                .ok_or(UevError::InitOffSupport)?;
            let chain_cfg = config.with_seed(derive_seed(config.seed, streams::MH_CHAIN));
            mh(target, &init, &chain_cfg)?.into_samples(config.batches)
        }
        other => {
            return Err(UevError::UnsupportedCombination(format!(
                "{other:?} is not a Monte Carlo engine"
            )))
        }
    };
    Ok(samples.with_seed(config.seed))
}

/// Posterior `p(x | y)` for an exact observation.
pub fn condition(model: &BaseModel, y: &[f64], config: &EngineConfig) -> Result<WeightedSamples> {
    config.validate()?;
    check_y_dim(model, y.len(), "observation")?;
    let target = |x: &[f64]| model.log_joint_unchecked(x, y);
    run_engine(model, &target, config)
}

/// Jeffrey's rule `E_{q(y|zeta)}[p(x | y)]`: draws `n_e` values of y from q,
/// conditions on each with an equal budget of `n`, and pools the runs with
/// equal mass per component.
pub fn jeffrey_mixture_infer(
    model: &BaseModel,
    q_sampler: &dyn Density,
    config: &EngineConfig,
) -> Result<WeightedSamples> {
    config.validate()?;
    check_y_dim(model, q_sampler.dim(), "q(y | zeta)")?;
    let mut rng = rng_from_seed(derive_seed(config.seed, streams::OUTER_Y));
    let ys: Vec<Vec<f64>> = (0..config.n_e).map(|_| q_sampler.sample(&mut rng)).collect();
    let parts = ys
        .par_iter()
        .enumerate()
        .map(|(j, y)| {
            let cfg = config.with_seed(component_seed(config.seed, j));
            condition(model, y, &cfg).map_err(|e| UevError::Component {
                index: j,
                y: y.clone(),
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    WeightedSamples::pool(parts, config.seed)
}

fn component_seed(seed: u64, j: usize) -> u64 {
    derive_seed(seed, streams::COMPONENT_BASE + j as u64)
}

/// Virtual evidence: targets `q(zeta | y) p(y | x) p(x)` over (x, y) and keeps x.
///
/// SNIS simulates (x, y) ancestrally from the model and weights by
/// `q(zeta | y)`. MH proposes x by random walk and refreshes y from
/// `p(y | x')`, so its acceptance ratio only needs `p(x)` and `q(zeta | y)`.
/// Neither path evaluates `p(y | x)`; forward simulation suffices.
pub fn virtual_infer(
    model: &BaseModel,
    zeta_log_lik: &dyn Fn(&[f64]) -> f64,
    config: &EngineConfig,
) -> Result<WeightedSamples> {
    config.validate()?;
    let dim_x = model.dim_x();
    let samples = match config.engine {
        Engine::Snis => {
            let mut rng = rng_from_seed(derive_seed(config.seed, streams::ANCESTRAL));
            let mut points = Vec::with_capacity(config.n * dim_x);
            let mut log_weights = Vec::with_capacity(config.n);
            for _ in 0..config.n {
                let (x, y) = model.sample_joint(&mut rng);
                let lw = zeta_log_lik(&y);
                log_weights.push(if lw.is_nan() { f64::NEG_INFINITY } else { lw });
                points.extend_from_slice(&x);
            }
            WeightedSamples::new(dim_x, points, log_weights, config.seed, vec![config.n])?
        }
        Engine::Mh => virtual_mh(model, zeta_log_lik, config)?.into_samples(config.batches),
        other => {
            return Err(UevError::UnsupportedCombination(format!(
                "{other:?} is not a Monte Carlo engine"
            )))
        }
    };
    Ok(samples.with_seed(config.seed))
}

fn virtual_mh(
    model: &BaseModel,
    zeta_log_lik: &dyn Fn(&[f64]) -> f64,
    config: &EngineConfig,
) -> Result<McmcRun> {
    let mut rng = rng_from_seed(derive_seed(config.seed, streams::MH_INIT));
    let (mut x, mut lp_prior, mut ll) = (0..MAX_INIT_ATTEMPTS)
        .find_map(|_| {
            let (x, y) = model.sample_joint(&mut rng);
            let ll = zeta_log_lik(&y);
            let lp = model.prior().log_pdf(&x);
            (ll.is_finite() && lp.is_finite()).then_some((x, lp, ll))
        })
        .ok_or(UevError::AllWeightsZero)?;
    let mut rng = rng_from_seed(derive_seed(config.seed, streams::MH_CHAIN));
    let dim = x.len();
    let mut proposal = vec![0.0; dim];
    let mut draws = Vec::with_capacity(config.n * dim);
    let mut accepted = 0usize;
    let total = config.mh_burn_in + config.n;
    for step in 0..total {
        for (p, c) in proposal.iter_mut().zip(&x) {
            let z: f64 = rng.sample(StandardNormal);
            *p = c + config.mh_step_scale * z;
        }
        let lp_new = model.prior().log_pdf(&proposal);
        if lp_new.is_finite() {
            let y_new = model.likelihood(&proposal).sample(&mut rng);
            let ll_new = zeta_log_lik(&y_new);
            let u: f64 = rng.random();
            if ll_new.is_finite() && u.ln() < (lp_new + ll_new) - (lp_prior + ll) {
                x.copy_from_slice(&proposal);
                lp_prior = lp_new;
                ll = ll_new;
                accepted += 1;
            }
        }
        if step >= config.mh_burn_in {
            draws.extend_from_slice(&x);
        }
    }
    Ok(McmcRun {
        dim,
        draws,
        acceptance_rate: accepted as f64 / total as f64,
        seed: config.seed,
    })
}

/// `ln Z(x)` for the normalized distributional target.
pub type LogNormalizer = dyn Fn(&[f64]) -> f64 + Sync;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistributionalMode {
    /// Target `f(y ~ D_q | x) p(x)`: the pseudo-likelihood with the implied
    /// (adjusted) prior.
    Pseudo,
    /// Target `f(y ~ D_q | x) p(x) / Z(x)`; needs a log Z(x) evaluator.
    Normalized,
}

fn crn_draws(q: &dyn Density, n_e: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    let mut ys = Vec::with_capacity(n_e * q.dim());
    for _ in 0..n_e {
        ys.extend(q.sample(&mut rng));
    }
    ys
}

fn pseudo_loglik_from_draws(model: &BaseModel, ys: &[f64], x: &[f64]) -> f64 {
    let n_e = (ys.len() / model.dim_y()) as f64;
    model.likelihood(x).sum_log_pdf(ys) / n_e
}

/// Monte Carlo estimate of `E_{q(y)}[ln p(y | x)]` from `n_e` draws generated
/// by `seed` alone, so the same draws serve every x. Returns `-inf` when a draw
/// falls off the likelihood's support.
pub fn distributional_pseudo_loglik(
    model: &BaseModel,
    q_sampler: &dyn Density,
    x: &[f64],
    n_e: usize,
    seed: u64,
) -> Result<f64> {
    if n_e < 1 {
        return Err(UevError::BudgetTooSmall("n_e must be >= 1".into()));
    }
    check_y_dim(model, q_sampler.dim(), "q(y)")?;
    if x.len() != model.dim_x() {
        return Err(UevError::DimensionMismatch {
            expected: model.dim_x(),
            got: x.len(),
            context: "latent point",
        });
    }
    let ys = crn_draws(q_sampler, n_e, seed);
    Ok(pseudo_loglik_from_draws(model, &ys, x))
}

/// Distributional evidence posterior.
///
/// The draw budget `n` is split across `config.batches` independent batches;
/// each batch fixes its own set of `n_e` inner draws (common random numbers),
/// so within a batch the target is a deterministic function of x. The batches
/// are pooled with equal mass.
pub fn distributional_infer(
    model: &BaseModel,
    q_sampler: &dyn Density,
    config: &EngineConfig,
    mode: DistributionalMode,
    log_normalizer: Option<&LogNormalizer>,
) -> Result<WeightedSamples> {
    config.validate()?;
    check_y_dim(model, q_sampler.dim(), "q(y)")?;
    let log_z = match mode {
        DistributionalMode::Pseudo => None,
        DistributionalMode::Normalized => Some(log_normalizer.ok_or(UevError::NormalizerUnavailable)?),
    };
    let sizes = config.split_n(config.batches);
    let parts = sizes
        .par_iter()
        .enumerate()
        .map(|(b, &n_b)| {
            let ys = crn_draws(q_sampler, config.n_e, derive_seed2(config.seed, streams::CRN, b as u64));
            let target = |x: &[f64]| {
                let lp = model.prior().log_pdf(x);
                if lp == f64::NEG_INFINITY {
                    return lp;
                }
                let t = lp + pseudo_loglik_from_draws(model, &ys, x);
                match log_z {
                    Some(z) => t - z(x),
                    None => t,
                }
            };
            let cfg = EngineConfig {
                n: n_b,
                batches: 1,
                seed: derive_seed2(config.seed, streams::COMPONENT_BASE, b as u64),
                ..*config
            };
            run_engine(model, &target, &cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    WeightedSamples::pool(parts, config.seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{Normal, PointMass};
    use crate::gaussian::GaussianChain;

    fn left_model() -> BaseModel {
        BaseModel::gaussian_chain(GaussianChain::from_sds(1.0, 1.0, 0.3).unwrap())
    }

    #[test]
    fn jeffrey_with_single_component_is_one_conditioning_run() {
        let model = left_model();
        let q = Normal::new(2.0, 1.0).unwrap();
        let cfg = EngineConfig::snis(2_000, 77).with_n_e(1);
        let pooled = jeffrey_mixture_infer(&model, &q, &cfg).unwrap();
        let y = q.sample(&mut rng_from_seed(derive_seed(77, streams::OUTER_Y)));
        let single = condition(&model, &y, &cfg.with_seed(component_seed(77, 0))).unwrap();
        assert_eq!(pooled.points(), single.points());
        let (a, b) = (pooled.normalized_weights(), single.normalized_weights());
        assert!(a.iter().zip(&b).all(|(u, v)| (u - v).abs() < 1e-15));
    }

    #[test]
    fn pseudo_loglik_point_mass_and_single_draw() {
        let model = left_model();
        let pm = PointMass::scalar(2.0).unwrap();
        let v = distributional_pseudo_loglik(&model, &pm, &[1.5], 17, 0).unwrap();
        let exact = Normal::new(1.5, 0.3).unwrap().log_pdf(&[2.0]);
        assert!((v - exact).abs() < 1e-12);

        let q = Normal::new(2.0, 1.0).unwrap();
        let y1 = q.sample(&mut rng_from_seed(42))[0];
        let one = distributional_pseudo_loglik(&model, &q, &[2.0], 1, 42).unwrap();
        assert!((one - Normal::new(2.0, 0.3).unwrap().log_pdf(&[y1])).abs() < 1e-12);
        assert!(distributional_pseudo_loglik(&model, &q, &[2.0], 0, 42).is_err());
    }

    #[test]
    fn normalized_mode_needs_normalizer() {
        let model = left_model();
        let q = Normal::new(2.0, 1.0).unwrap();
        let cfg = EngineConfig::snis(100, 1).with_n_e(10);
        assert_eq!(
            distributional_infer(&model, &q, &cfg, DistributionalMode::Normalized, None),
            Err(UevError::NormalizerUnavailable)
        );
    }

    #[test]
    fn constant_virtual_likelihood_recovers_prior() {
        let model = left_model();
        let cfg = EngineConfig::snis(50_000, 3);
        let s = virtual_infer(&model, &|_| -1.7, &cfg).unwrap();
        assert!((s.ess() - 50_000.0).abs() < 1e-6);
        assert!((s.mean()[0] - 1.0).abs() < 3.0 * s.standard_error()[0]);
    }

    #[test]
    fn dimension_checks() {
        let model = left_model();
        let cfg = EngineConfig::snis(10, 0);
        assert!(matches!(condition(&model, &[1.0, 2.0], &cfg), Err(UevError::DimensionMismatch { .. })));
    }
}

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, UevError};
use crate::seed::rng_from_seed;

use super::{EngineConfig, WeightedSamples};

/// Post-burn-in draws of a random-walk Metropolis-Hastings chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmcRun {
    pub dim: usize,
    /// Flat buffer, `dim` values per draw.
    pub draws: Vec<f64>,
    /// Accepted fraction over burn-in and sampling steps.
    pub acceptance_rate: f64,
    pub seed: u64,
}

impl McmcRun {
    pub fn len(&self) -> usize {
        self.draws.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = self.len() as f64;
        let mut m = vec![0.0; self.dim];
        for p in self.draws.chunks_exact(self.dim) {
            m.iter_mut().zip(p).for_each(|(a, b)| *a += b / n);
        }
        m
    }

    /// Equal-weight samples split into `batches` contiguous blocks (batch means).
    pub fn into_samples(self, batches: usize) -> WeightedSamples {
        WeightedSamples::unweighted(self.dim, self.draws, self.seed, batches)
    }
}

/// Random-walk MH with isotropic Gaussian proposals of scale `config.mh_step_scale`.
/// Runs `config.mh_burn_in` discarded steps, then keeps `config.n` draws.
pub fn mh(
    target_log_pdf: &dyn Fn(&[f64]) -> f64,
    init: &[f64],
    config: &EngineConfig,
) -> Result<McmcRun> {
    config.validate()?;
    let mut current_lp = target_log_pdf(init);
    if !current_lp.is_finite() {
        return Err(UevError::InitOffSupport);
    }
    let dim = init.len();
    let mut rng = rng_from_seed(config.seed);
    let mut current = init.to_vec();
    let mut proposal = vec![0.0; dim];
    let mut draws = Vec::with_capacity(config.n * dim);
    let mut accepted = 0usize;
    let total = config.mh_burn_in + config.n;
    for step in 0..total {
        for (p, c) in proposal.iter_mut().zip(&current) {
            let z: f64 = rng.sample(StandardNormal);
            *p = c + config.mh_step_scale * z;
        }
        let lp = target_log_pdf(&proposal);
        let u: f64 = rng.random();
        if lp.is_finite() && u.ln() < lp - current_lp {
            current.copy_from_slice(&proposal);
            current_lp = lp;
            accepted += 1;
        }
        if step >= config.mh_burn_in {
            draws.extend_from_slice(&current);
        }
    }
    Ok(McmcRun {
        dim,
        draws,
        acceptance_rate: accepted as f64 / total as f64,
        seed: config.seed,
    })
}

//! Approximate inference engines for the continuous branches of evidence
//! dispatch: importance sampling, random-walk Metropolis-Hastings, and the
//! Jeffrey, virtual and distributional estimators built on them.
//!
//! Jeffrey's rule costs one engine run per outer draw of y (n_e runs); virtual
//! evidence costs a single run; distributional evidence costs a single run whose
//! target carries an n_e-draw inner expectation.

mod inference;
mod mh;
mod samples;
mod snis;

use serde::{Deserialize, Serialize};

use crate::error::{Result, UevError};

pub use inference::{
    condition, distributional_infer, distributional_pseudo_loglik, jeffrey_mixture_infer,
    virtual_infer, DistributionalMode, LogNormalizer,
};
pub use mh::{mh, McmcRun};
pub use samples::WeightedSamples;
pub use snis::snis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    AnalyticGaussian,
    DiscreteExact,
    Snis,
    Mh,
}

impl std::str::FromStr for Engine {
    type Err = UevError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic-gaussian" | "analytic" => Ok(Engine::AnalyticGaussian),
            "discrete-exact" | "discrete" => Ok(Engine::DiscreteExact),
            "snis" => Ok(Engine::Snis),
            "mh" => Ok(Engine::Mh),
            other => Err(UevError::InvalidParameter(format!("unknown engine '{other}'"))),
        }
    }
}

/// Engine selection and sample budgets.
///
/// `n` is the draw count of one engine run (post-burn-in steps for MH), `n_e`
/// the number of draws for a Monte Carlo expectation, `batches` the number of
/// independent blocks a run is split into for error estimation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub engine: Engine,
    pub n: usize,
    pub n_e: usize,
    pub mh_step_scale: f64,
    pub mh_burn_in: usize,
    pub batches: usize,
    pub seed: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            engine: Engine::Snis,
            n: 10_000,
            n_e: 256,
            mh_step_scale: 0.5,
            mh_burn_in: 1_000,
            batches: 20,
            seed: 0,
        }
    }
}

impl EngineConfig {
    pub fn snis(n: usize, seed: u64) -> Self {
        Self {
            engine: Engine::Snis,
            n,
            seed,
            ..Self::default()
        }
    }

    pub fn mh(n: usize, step_scale: f64, seed: u64) -> Self {
        Self {
            engine: Engine::Mh,
            n,
            mh_step_scale: step_scale,
            seed,
            ..Self::default()
        }
    }

    pub fn with_n_e(self, n_e: usize) -> Self {
        Self { n_e, ..self }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn with_batches(self, batches: usize) -> Self {
        Self { batches, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(UevError::BudgetTooSmall("n must be >= 1".into()));
        }
        if self.n_e < 1 {
            return Err(UevError::BudgetTooSmall("n_e must be >= 1".into()));
        }
        if self.batches < 1 {
            return Err(UevError::BudgetTooSmall("batches must be >= 1".into()));
        }
        if !(self.mh_step_scale > 0.0) || !self.mh_step_scale.is_finite() {
            return Err(UevError::InvalidParameter(format!(
                "mh_step_scale must be > 0, got {}",
                self.mh_step_scale
            )));
        }
        Ok(())
    }

    /// Splits `n` into `parts` near-equal sizes.
    pub(crate) fn split_n(&self, parts: usize) -> Vec<usize> {
        let parts = parts.clamp(1, self.n);
        (0..parts)
            .map(|i| self.n / parts + usize::from(i < self.n % parts))
            .collect()
    }
}

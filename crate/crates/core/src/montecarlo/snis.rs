use crate::density::Density;
use crate::error::Result;
use crate::seed::rng_from_seed;

use super::WeightedSamples;

/// Self-normalized importance sampling: `x_i ~ proposal`,
/// `log w_i = target(x_i) - proposal.log_pdf(x_i)`.
///
/// Fails with `AllWeightsZero` when no draw lands on the target's support.
pub fn snis(
    target_log_pdf: &dyn Fn(&[f64]) -> f64,
    proposal: &dyn Density,
    n: usize,
    seed: u64,
) -> Result<WeightedSamples> {
    let dim = proposal.dim();
    let mut rng = rng_from_seed(seed);
    let mut points = Vec::with_capacity(n * dim);
    let mut log_weights = Vec::with_capacity(n);
    for _ in 0..n {
        let x = proposal.sample(&mut rng);
        let lw = target_log_pdf(&x) - proposal.log_pdf(&x);
        log_weights.push(if lw.is_nan() { f64::NEG_INFINITY } else { lw });
        points.extend_from_slice(&x);
    }
    WeightedSamples::new(dim, points, log_weights, seed, vec![n])
}

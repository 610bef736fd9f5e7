use serde::{Deserialize, Serialize};

use crate::error::{Result, UevError};

/// Draws with log importance weights.
///
/// `batches` lists the sizes of contiguous, independently generated blocks of
/// draws. With a single batch the standard error uses the self-normalized
/// delta-method estimator; with several it uses the spread of the batch means,
/// which also covers between-batch noise (outer mixture draws, per-batch
/// common random numbers, MCMC autocorrelation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedSamples {
    dim: usize,
    points: Vec<f64>,
    log_weights: Vec<f64>,
    seed: u64,
    ess: f64,
    batches: Vec<usize>,
}

fn normalize_log_weights(log_weights: &[f64]) -> Option<Vec<f64>> {
    let max = log_weights
        .iter()
        .copied()
        .filter(|w| !w.is_nan())
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return None;
    }
    let mut w: Vec<f64> = log_weights
        .iter()
        .map(|&lw| if lw.is_nan() { 0.0 } else { (lw - max).exp() })
        .collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    Some(w)
}

impl WeightedSamples {
    pub(crate) fn new(
        dim: usize,
        points: Vec<f64>,
        log_weights: Vec<f64>,
        seed: u64,
        batches: Vec<usize>,
    ) -> Result<Self> {
        assert_eq!(points.len(), dim * log_weights.len(), "points/weights length mismatch");
        assert_eq!(batches.iter().sum::<usize>(), log_weights.len(), "batch sizes must cover all draws");
        let w = normalize_log_weights(&log_weights).ok_or(UevError::AllWeightsZero)?;
        let ess = 1.0 / w.iter().map(|v| v * v).sum::<f64>();
        Ok(Self {
            dim,
            points,
            log_weights,
            seed,
            ess: ess.min(w.len() as f64),
            batches,
        })
    }

    /// Equally weighted draws (e.g. an MCMC chain) split into `n_batches` blocks.
    pub(crate) fn unweighted(dim: usize, points: Vec<f64>, seed: u64, n_batches: usize) -> Self {
        let n = points.len() / dim;
        let b = n_batches.clamp(1, n.max(1));
        let batches = (0..b).map(|i| n / b + usize::from(i < n % b)).collect();
        Self::new(dim, points, vec![0.0; n], seed, batches).expect("uniform weights are valid")
    }

    /// Pools independent runs with equal total mass per run; each run becomes one batch.
    pub(crate) fn pool(parts: Vec<WeightedSamples>, seed: u64) -> Result<Self> {
        let dim = parts.first().map_or(1, |p| p.dim);
        let log_mass = -(parts.len() as f64).ln();
        let mut points = Vec::new();
        let mut log_weights = Vec::new();
        let mut batches = Vec::with_capacity(parts.len());
        for part in parts {
            debug_assert_eq!(part.dim, dim);
            let w = part.normalized_weights();
            log_weights.extend(w.iter().map(|v| v.ln() + log_mass));
            batches.push(part.len());
            points.extend(part.points);
        }
        Self::new(dim, points, log_weights, seed, batches)
    }

    pub(crate) fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn len(&self) -> usize {
        self.log_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    /// Flat buffer, `dim` values per draw.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn ess(&self) -> f64 {
        self.ess
    }

    pub fn batches(&self) -> &[usize] {
        &self.batches
    }

    /// ESS below 1% of the draw count.
    pub fn is_degenerate(&self) -> bool {
        self.ess < 0.01 * self.len() as f64
    }

    pub fn normalized_weights(&self) -> Vec<f64> {
        normalize_log_weights(&self.log_weights).expect("checked at construction")
    }

    pub fn mean(&self) -> Vec<f64> {
        self.weighted_mean(&self.normalized_weights())
    }

    fn weighted_mean(&self, w: &[f64]) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for (p, wi) in self.points.chunks_exact(self.dim).zip(w) {
            for (mc, pc) in m.iter_mut().zip(p) {
                *mc += wi * pc;
            }
        }
        m
    }

    pub fn variance(&self) -> Vec<f64> {
        let w = self.normalized_weights();
        let m = self.weighted_mean(&w);
        let mut v = vec![0.0; self.dim];
        for (p, wi) in self.points.chunks_exact(self.dim).zip(&w) {
            for ((vc, pc), mc) in v.iter_mut().zip(p).zip(&m) {
                *vc += wi * (pc - mc) * (pc - mc);
            }
        }
        v
    }

    pub fn sd(&self) -> Vec<f64> {
        self.variance().into_iter().map(f64::sqrt).collect()
    }

    /// Monte Carlo standard error of [`mean`](Self::mean), per dimension.
    pub fn standard_error(&self) -> Vec<f64> {
        let w = self.normalized_weights();
        let m = self.weighted_mean(&w);
        let mut se2 = vec![0.0; self.dim];
        if self.batches.len() <= 1 {
            for (p, wi) in self.points.chunks_exact(self.dim).zip(&w) {
                for ((s, pc), mc) in se2.iter_mut().zip(p).zip(&m) {
                    *s += wi * wi * (pc - mc) * (pc - mc);
                }
            }
        } else {
            let b = self.batches.len() as f64;
            let mut start = 0;
            for &size in &self.batches {
                let range = start..start + size;
                start += size;
                let mass: f64 = w[range.clone()].iter().sum();
                if mass <= 0.0 {
                    continue;
                }
                for (d, s) in se2.iter_mut().enumerate() {
                    let bm: f64 = range
                        .clone()
                        .map(|i| w[i] * self.points[i * self.dim + d])
                        .sum::<f64>()
                        / mass;
                    *s += mass * mass * (bm - m[d]) * (bm - m[d]);
                }
            }
            se2.iter_mut().for_each(|s| *s *= b / (b - 1.0));
        }
        se2.into_iter().map(f64::sqrt).collect()
    }
}

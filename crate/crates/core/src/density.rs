//! Densities over points in R^d (or finite subsets of R).
//!
//! A density exposes its log-density, a sampler and a support descriptor. The
//! `as_*` hooks let the analytic and exact engines recognize the closed-form
//! families they know how to handle; every other density goes to Monte Carlo.

use std::fmt;

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Result, UevError};
use crate::gaussian::GaussianParams;

pub(crate) const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Support {
    RealLine,
    PositiveReals,
    FiniteSet(Vec<f64>),
}

impl Support {
    /// Componentwise membership test.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().all(|&v| match self {
            Support::RealLine => v.is_finite(),
            Support::PositiveReals => v.is_finite() && v > 0.0,
            Support::FiniteSet(values) => values.contains(&v),
        })
    }
}

pub trait Density: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn support(&self) -> Support;

    /// Log-density; `-inf` off the support.
    fn log_pdf(&self, x: &[f64]) -> f64;

    fn sample(&self, rng: &mut dyn RngCore) -> Vec<f64>;

    /// Sum of `log_pdf` over a flat buffer of points of this density's dimension.
    fn sum_log_pdf(&self, points: &[f64]) -> f64 {
        points.chunks_exact(self.dim()).map(|p| self.log_pdf(p)).sum()
    }

    fn as_gaussian(&self) -> Option<GaussianParams> {
        None
    }

    fn as_point_mass(&self) -> Option<&[f64]> {
        None
    }

    fn as_categorical(&self) -> Option<&Categorical> {
        None
    }
}

#[inline]
pub(crate) fn normal_log_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * z * z - sd.ln() - LN_SQRT_2PI
}

/// Scalar normal N(mean, sd^2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normal {
    mean: f64,
    sd: f64,
}

impl Normal {
    pub fn new(mean: f64, sd: f64) -> Result<Self> {
        if !mean.is_finite() || !(sd > 0.0) || !sd.is_finite() {
            return Err(UevError::InvalidParameter(format!(
                "normal needs finite mean and sd > 0, got N({mean}, {sd}^2)"
            )));
        }
        Ok(Self { mean, sd })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn sd(&self) -> f64 {
        self.sd
    }
}

impl Density for Normal {
    fn dim(&self) -> usize {
        1
    }

    fn support(&self) -> Support {
        Support::RealLine
    }

    fn log_pdf(&self, x: &[f64]) -> f64 {
        if !x[0].is_finite() {
            return f64::NEG_INFINITY;
        }
        normal_log_pdf(x[0], self.mean, self.sd)
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        let z: f64 = rng.sample(StandardNormal);
        vec![self.mean + self.sd * z]
    }

    fn sum_log_pdf(&self, points: &[f64]) -> f64 {
        let inv = 1.0 / self.sd;
        let mut ss = 0.0;
        for &y in points {
            let z = (y - self.mean) * inv;
            ss += z * z;
        }
        -0.5 * ss - points.len() as f64 * (self.sd.ln() + LN_SQRT_2PI)
    }

    fn as_gaussian(&self) -> Option<GaussianParams> {
        GaussianParams::new(self.mean, self.sd * self.sd).ok()
    }
}

/// N(mean, sd^2) truncated to the positive reals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositiveNormal {
    mean: f64,
    sd: f64,
    log_mass: f64,
}

impl PositiveNormal {
    pub fn new(mean: f64, sd: f64) -> Result<Self> {
        Normal::new(mean, sd)?;
        // P(X > 0) for the untruncated normal.
        let mass = 0.5 * erfc(-mean / (sd * std::f64::consts::SQRT_2));
        if !(mass > 1e-300) {
            return Err(UevError::InvalidParameter(format!(
                "N({mean}, {sd}^2) has no mass on the positive reals"
            )));
        }
        Ok(Self {
            mean,
            sd,
            log_mass: mass.ln(),
        })
    }

    pub fn mean_param(&self) -> f64 {
        self.mean
    }

    pub fn sd_param(&self) -> f64 {
        self.sd
    }
}

impl Density for PositiveNormal {
    fn dim(&self) -> usize {
        1
    }

    fn support(&self) -> Support {
        Support::PositiveReals
    }

    fn log_pdf(&self, x: &[f64]) -> f64 {
        if !(x[0] > 0.0) || !x[0].is_finite() {
            return f64::NEG_INFINITY;
        }
        normal_log_pdf(x[0], self.mean, self.sd) - self.log_mass
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        // Plain rejection; only used with priors that keep most mass positive.
        loop {
            let z: f64 = rng.sample(StandardNormal);
            let v = self.mean + self.sd * z;
            if v > 0.0 {
                return vec![v];
            }
        }
    }
}

/// Dirac mass at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointMass {
    point: Vec<f64>,
}

impl PointMass {
    pub fn new(point: Vec<f64>) -> Result<Self> {
        if point.is_empty() || point.iter().any(|v| !v.is_finite()) {
            return Err(UevError::InvalidParameter(
                "point mass needs a non-empty finite point".into(),
            ));
        }
        Ok(Self { point })
    }

    pub fn scalar(value: f64) -> Result<Self> {
        Self::new(vec![value])
    }
}

impl Density for PointMass {
    fn dim(&self) -> usize {
        self.point.len()
    }

    fn support(&self) -> Support {
        Support::FiniteSet(self.point.clone())
    }

    fn log_pdf(&self, x: &[f64]) -> f64 {
        if x == self.point.as_slice() {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    }

    fn sample(&self, _rng: &mut dyn RngCore) -> Vec<f64> {
        self.point.clone()
    }

    fn as_point_mass(&self) -> Option<&[f64]> {
        Some(&self.point)
    }
}

/// Probability mass function over a finite set of scalar values.
#[derive(Debug, Clone, PartialEq)]
pub struct Categorical {
    values: Vec<f64>,
    probs: Vec<f64>,
    cumulative: Vec<f64>,
}

impl Categorical {
    pub fn new(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.len() != probs.len() {
            return Err(UevError::InvalidParameter(format!(
                "categorical needs matching non-empty values/probs, got {} and {}",
                values.len(),
                probs.len()
            )));
        }
        if probs.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(UevError::InvalidParameter(
                "categorical probabilities must be finite and non-negative".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(UevError::InvalidParameter(format!(
                "categorical probabilities sum to {total}, not 1"
            )));
        }
        let mut acc = 0.0;
        let cumulative = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(Self {
            values,
            probs,
            cumulative,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

impl Density for Categorical {
    fn dim(&self) -> usize {
        1
    }

    fn support(&self) -> Support {
        Support::FiniteSet(self.values.clone())
    }

    fn log_pdf(&self, x: &[f64]) -> f64 {
        match self.values.iter().position(|&v| v == x[0]) {
            Some(k) => self.probs[k].ln(),
            None => f64::NEG_INFINITY,
        }
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        let u: f64 = rng.random::<f64>() * self.cumulative[self.cumulative.len() - 1];
        let k = self
            .cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.values.len() - 1);
        vec![self.values[k]]
    }

    fn as_categorical(&self) -> Option<&Categorical> {
        Some(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;
    use std::f64::consts::PI;

    #[test]
    fn normal_log_pdf_at_mode() {
        let n = Normal::new(0.0, 1.0).unwrap();
        assert!((n.log_pdf(&[0.0]) + 0.5 * (2.0 * PI).ln()).abs() < 1e-15);
        assert_eq!(n.log_pdf(&[f64::NAN]), f64::NEG_INFINITY);
    }

    #[test]
    fn normal_batch_matches_pointwise() {
        let n = Normal::new(0.7, 0.3).unwrap();
        let ys = [0.1, 0.5, 2.0, -1.0];
        let pointwise: f64 = ys.iter().map(|y| n.log_pdf(&[*y])).sum();
        assert!((n.sum_log_pdf(&ys) - pointwise).abs() < 1e-12);
    }

    #[test]
    fn positive_normal_respects_support() {
        let d = PositiveNormal::new(9.81, 2.0).unwrap();
        assert_eq!(d.log_pdf(&[-1.0]), f64::NEG_INFINITY);
        assert_eq!(d.log_pdf(&[0.0]), f64::NEG_INFINITY);
        assert!(d.log_pdf(&[9.81]).is_finite());
        let mut rng = rng_from_seed(3);
        for _ in 0..1000 {
            assert!(d.support().contains(&d.sample(&mut rng)));
        }
        // heavy truncation: normalizer must be applied
        let t = PositiveNormal::new(0.0, 1.0).unwrap();
        let full = Normal::new(0.0, 1.0).unwrap();
        assert!((t.log_pdf(&[0.5]) - full.log_pdf(&[0.5]) - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn categorical_samples_in_support() {
        let c = Categorical::new(vec![0.0, 1.0], vec![0.25, 0.75]).unwrap();
        let mut rng = rng_from_seed(1);
        let ones = (0..20_000)
            .filter(|_| c.sample(&mut rng)[0] == 1.0)
            .count() as f64;
        assert!((ones / 20_000.0 - 0.75).abs() < 0.02);
        assert_eq!(c.log_pdf(&[0.5]), f64::NEG_INFINITY);
        assert!(Categorical::new(vec![0.0], vec![0.5]).is_err());
    }

    #[test]
    fn point_mass_is_degenerate() {
        let p = PointMass::scalar(2.0).unwrap();
        assert_eq!(p.log_pdf(&[2.0]), 0.0);
        assert_eq!(p.log_pdf(&[2.0 + 1e-12]), f64::NEG_INFINITY);
        assert_eq!(p.sample(&mut rng_from_seed(0)), vec![2.0]);
    }
}

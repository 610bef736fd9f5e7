//! Independent numerical references shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uev_core::JointTable;

pub fn npdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
}

/// Uniform grid `(lo + i) * h` for `i in 0..len`; trapezoid weights.
#[derive(Clone, Copy)]
struct Grid {
    lo: i64,
    len: usize,
    h: f64,
}

impl Grid {
    fn covering(a: f64, b: f64, h: f64) -> Self {
        let lo = (a / h).floor() as i64;
        let hi = (b / h).ceil() as i64;
        Grid {
            lo,
            len: (hi - lo + 1) as usize,
            h,
        }
    }

    fn at(&self, i: usize) -> f64 {
        (self.lo + i as i64) as f64 * self.h
    }

    fn weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.len {
            0.5 * self.h
        } else {
            self.h
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    acc.iter().sum::<f64>() + tail
}

/// Kernel `N(d h; 0, sd)` for `d` in `-half..=half`.
fn kernel(sd: f64, h: f64) -> (Vec<f64>, i64) {
    let half = (8.0 * sd / h).ceil() as i64;
    ((-half..=half).map(|d| npdf(d as f64 * h, 0.0, sd)).collect(), half)
}

/// Mean and sd of a density tabulated with weights on a grid.
fn moments(grid: &Grid, dens: &[f64], shift: f64) -> (f64, f64) {
    let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for (i, d) in dens.iter().enumerate() {
        let w = grid.weight(i) * d;
        let x = grid.at(i) - shift;
        m0 += w;
        m1 += w * x;
        m2 += w * x * x;
    }
    let mean = m1 / m0;
    (mean + shift, (m2 / m0 - mean * mean).sqrt())
}

/// `E_{q(y)}[p(x | y)]` with `q = N(zeta, sigma_q^2)`, by nested quadrature.
pub fn jeffrey_quadrature(mu_x: f64, sigma_x: f64, sigma_yx: f64, zeta: f64, sigma_q: f64, h: f64) -> (f64, f64) {
    let ys = Grid::covering(zeta - 8.0 * sigma_q, zeta + 8.0 * sigma_q, h);
    let (k, half) = kernel(sigma_yx, h);
    let xs = Grid::covering(ys.at(0) - 8.0 * sigma_yx - h, ys.at(ys.len - 1) + 8.0 * sigma_yx + h, h);
    let mut p0 = vec![0.0; xs.len];
    let mut p1 = vec![0.0; xs.len];
    let mut p2 = vec![0.0; xs.len];
    for i in 0..xs.len {
        let x = xs.at(i) - zeta;
        p0[i] = xs.weight(i) * npdf(xs.at(i), mu_x, sigma_x);
        p1[i] = p0[i] * x;
        p2[i] = p1[i] * x;
    }
    let (mut w, mut e1, mut e2) = (0.0, 0.0, 0.0);
    for j in 0..ys.len {
        let centre = (ys.lo + j as i64 - xs.lo) as usize;
        let a = centre - half as usize;
        let b = centre + half as usize + 1;
        let (a0, a1, a2) = (dot(&p0[a..b], &k), dot(&p1[a..b], &k), dot(&p2[a..b], &k));
        let qw = ys.weight(j) * npdf(ys.at(j), zeta, sigma_q);
        w += qw;
        e1 += qw * a1 / a0;
        e2 += qw * a2 / a0;
    }
    let mean = e1 / w;
    (mean + zeta, (e2 / w - mean * mean).sqrt())
}

/// `p(x) * integral q(zeta | y) p(y | x) dy` with `q(zeta | y) = N(zeta; y, sigma_qzeta^2)`.
pub fn virtual_quadrature(mu_x: f64, sigma_x: f64, sigma_yx: f64, zeta: f64, sigma_qzeta: f64, h: f64) -> (f64, f64) {
    let ys = Grid::covering(zeta - 8.0 * sigma_qzeta, zeta + 8.0 * sigma_qzeta, h);
    let (k, half) = kernel(sigma_yx, h);
    let xs = Grid::covering(ys.at(0) - 8.0 * sigma_yx - h, ys.at(ys.len - 1) + 8.0 * sigma_yx + h, h);
    // Padded so every x sees a full kernel window; padding carries zero weight.
    let pad = half as usize;
    let mut qv = vec![0.0; ys.len + 2 * (pad + xs.len)];
    let offset = pad + xs.len;
    for j in 0..ys.len {
        qv[offset + j] = ys.weight(j) * npdf(zeta, ys.at(j), sigma_qzeta);
    }
    let dens: Vec<f64> = (0..xs.len)
        .map(|i| {
            let centre = (offset as i64 + xs.lo + i as i64 - ys.lo) as usize;
            let lik = dot(&qv[centre - pad..centre + pad + 1], &k);
            npdf(xs.at(i), mu_x, sigma_x) * lik
        })
        .collect();
    moments(&xs, &dens, zeta)
}

/// Posterior under `exp E_q[ln N(y; x, sigma_yx^2)]` with `q = N(mu_q, sigma_q^2)`:
/// the expectation is expanded into the first two moments of q, each by quadrature.
pub fn distributional_quadrature(mu_x: f64, sigma_x: f64, sigma_yx: f64, mu_q: f64, sigma_q: f64, h: f64) -> (f64, f64) {
    let ys = Grid::covering(mu_q - 8.0 * sigma_q, mu_q + 8.0 * sigma_q, h);
    let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for j in 0..ys.len {
        let w = ys.weight(j) * npdf(ys.at(j), mu_q, sigma_q);
        m0 += w;
        m1 += w * ys.at(j);
        m2 += w * ys.at(j) * ys.at(j);
    }
    let (ey, ey2) = (m1 / m0, m2 / m0);
    let xs = Grid::covering(mu_x - 8.0 * sigma_x, mu_x + 8.0 * sigma_x, h);
    let s2 = sigma_yx * sigma_yx;
    let logs: Vec<f64> = (0..xs.len)
        .map(|i| {
            let x = xs.at(i);
            let z = (x - mu_x) / sigma_x;
            -0.5 * z * z - (ey2 - 2.0 * x * ey + x * x) / (2.0 * s2)
        })
        .collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let dens: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    moments(&xs, &dens, mu_x)
}

/// Random joint table with `|x| <= 6` and `K <= 6`, all cells positive.
pub fn random_table(rng: &mut ChaCha8Rng) -> JointTable {
    let nx = rng.random_range(1..=6);
    let ny = rng.random_range(2..=6);
    let cells: Vec<Vec<f64>> = (0..ny)
        .map(|_| (0..nx).map(|_| rng.random_range(0.01..1.0)).collect())
        .collect();
    let total: f64 = cells.iter().flatten().sum();
    let probs = cells
        .into_iter()
        .map(|row| row.into_iter().map(|c| c / total).collect())
        .collect();
    JointTable::new((0..nx).map(|i| i as f64).collect(), (0..ny).map(|k| k as f64).collect(), probs).unwrap()
}

pub fn random_simplex(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..1.0)).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

pub fn random_positive(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    (0..k).map(|_| rng.random_range(0.01..10.0)).collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

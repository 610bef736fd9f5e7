//! Sample-based diagnostics for whether Jeffrey's rule can be consistent with
//! a base model.
//!
//! Consistency requires some `p(zeta | y)` with
//! `q(y | zeta) = p(zeta | y) p(y) / E_p(y)[p(zeta | y)]`. That condition is
//! generally intractable and is not checked. Two necessary conditions are:
//!
//! * structure: factorized evidence needs one zeta component and one latent
//!   parent per observable component;
//! * moments: `var[y_i] >= E[var[y_i | zeta]]` and
//!   `det cov[y] >= det E[cov[y | zeta]]`.
//!
//! The moment checks compare base-model draws of y against draws from
//! `q(y | zeta)` and decide at three standard errors, with an inconclusive band
//! in between.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::density::Density;
use crate::error::{Result, UevError};
use crate::model::BaseModel;
use crate::seed::{derive_seed, rng_from_seed, streams};

/// Builds `q(y | zeta)` for a drawn zeta.
pub type ConditionalSampler = dyn Fn(&[f64]) -> Result<Box<dyn Density>>;

pub const DECISION_SES: f64 = 3.0;
pub const BOOTSTRAP_REPLICATES: usize = 200;
pub const SINGULAR_DET: f64 = 1e-12;

pub const CONDITION1_NOTE: &str = "not checked: existence of p(zeta|y) with \
q(y|zeta) = p(zeta|y) p(y) / E_p(y)[p(zeta|y)] is intractable in general; \
only the necessary structure and moment conditions are tested";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

fn decide(gap: f64, se: f64) -> Verdict {
    if gap > DECISION_SES * se {
        Verdict::Pass
    } else if gap < -DECISION_SES * se {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    }
}

/// Outer draws `zeta_i ~ p(zeta)` with `k` inner draws `y ~ q(y | zeta_i)` each,
/// plus `m` blocks of `k` base-model draws of y.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedDraws {
    dim: usize,
    m: usize,
    k: usize,
    y_marginal: Vec<f64>,
    zeta: Vec<Vec<f64>>,
    y_given_zeta: Vec<f64>,
    seed: u64,
}

impl PairedDraws {
    /// `y_marginal` and `y_given_zeta` are flat `m * k * dim` buffers, grouped
    /// by outer index.
    pub fn new(
        dim: usize,
        k: usize,
        y_marginal: Vec<f64>,
        zeta: Vec<Vec<f64>>,
        y_given_zeta: Vec<f64>,
        seed: u64,
    ) -> Result<Self> {
        let m = zeta.len();
        if m < 2 || k < 2 {
            return Err(UevError::TooFewDraws(format!("need m >= 2 and k >= 2, got m = {m}, k = {k}")));
        }
        if dim == 0 || y_marginal.len() != m * k * dim || y_given_zeta.len() != m * k * dim {
            return Err(UevError::TooFewDraws(format!(
                "expected {} values for m = {m}, k = {k}, dim = {dim}",
                m * k * dim
            )));
        }
        Ok(Self {
            dim,
            m,
            k,
            y_marginal,
            zeta,
            y_given_zeta,
            seed,
        })
    }

    /// Draws from arbitrary samplers.
    pub fn generate(
        y_marginal_sampler: &dyn Fn(&mut dyn RngCore) -> Vec<f64>,
        zeta_sampler: &dyn Density,
        q_given_zeta: &ConditionalSampler,
        m: usize,
        k: usize,
        seed: u64,
    ) -> Result<Self> {
        if m < 2 || k < 2 {
            return Err(UevError::TooFewDraws(format!("need m >= 2 and k >= 2, got m = {m}, k = {k}")));
        }
        let mut rng = rng_from_seed(derive_seed(seed, streams::ANCESTRAL));
        let first = y_marginal_sampler(&mut rng);
        let dim = first.len();
        let mut y_marginal = Vec::with_capacity(m * k * dim);
        y_marginal.extend(first);
        for _ in 1..m * k {
            y_marginal.extend(y_marginal_sampler(&mut rng));
        }
        let mut rng = rng_from_seed(derive_seed(seed, streams::OUTER_Y));
        let mut zeta = Vec::with_capacity(m);
        let mut y_given_zeta = Vec::with_capacity(m * k * dim);
        for _ in 0..m {
            let z = zeta_sampler.sample(&mut rng);
            let q = q_given_zeta(&z)?;
            if q.dim() != dim {
                return Err(UevError::DimensionMismatch {
                    expected: dim,
                    got: q.dim(),
                    context: "q(y | zeta)",
                });
            }
            for _ in 0..k {
                y_given_zeta.extend(q.sample(&mut rng));
            }
            zeta.push(z);
        }
        Self::new(dim, k, y_marginal, zeta, y_given_zeta, seed)
    }

    /// Base-model draws of y come from ancestral simulation of `model`.
    pub fn from_model(
        model: &BaseModel,
        zeta_sampler: &dyn Density,
        q_given_zeta: &ConditionalSampler,
        m: usize,
        k: usize,
        seed: u64,
    ) -> Result<Self> {
        Self::generate(&|rng| model.sample_joint(rng).1, zeta_sampler, q_given_zeta, m, k, seed)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn outer(&self) -> usize {
        self.m
    }

    pub fn inner(&self) -> usize {
        self.k
    }

    pub fn zeta(&self) -> &[Vec<f64>] {
        &self.zeta
    }

    fn block<'a>(&self, buf: &'a [f64], i: usize) -> &'a [f64] {
        let len = self.k * self.dim;
        &buf[i * len..(i + 1) * len]
    }
}

/// First and second moment sums of a block of draws.
#[derive(Clone)]
struct Moments {
    n: f64,
    sum: Vec<f64>,
    outer: Vec<f64>,
}

impl Moments {
    fn zero(dim: usize) -> Self {
        Self {
            n: 0.0,
            sum: vec![0.0; dim],
            outer: vec![0.0; dim * dim],
        }
    }

    fn of(points: &[f64], dim: usize) -> Self {
        let mut m = Self::zero(dim);
        for p in points.chunks_exact(dim) {
            m.n += 1.0;
            for a in 0..dim {
                m.sum[a] += p[a];
                for b in 0..dim {
                    m.outer[a * dim + b] += p[a] * p[b];
                }
            }
        }
        m
    }

    fn add(&mut self, other: &Moments) {
        self.n += other.n;
        self.sum.iter_mut().zip(&other.sum).for_each(|(a, b)| *a += b);
        self.outer.iter_mut().zip(&other.outer).for_each(|(a, b)| *a += b);
    }

    /// Unbiased sample covariance, row-major.
    fn covariance(&self) -> Vec<f64> {
        let dim = self.sum.len();
        let mut c = vec![0.0; dim * dim];
        for a in 0..dim {
            for b in 0..dim {
                c[a * dim + b] =
                    (self.outer[a * dim + b] - self.sum[a] * self.sum[b] / self.n) / (self.n - 1.0);
            }
        }
        c
    }

    fn mean(&self) -> Vec<f64> {
        self.sum.iter().map(|s| s / self.n).collect()
    }
}

fn determinant(mut a: Vec<f64>, dim: usize) -> f64 {
    let mut det = 1.0;
    for col in 0..dim {
        let pivot = (col..dim)
            .max_by(|&i, &j| a[i * dim + col].abs().total_cmp(&a[j * dim + col].abs()))
            .unwrap();
        if a[pivot * dim + col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for c in 0..dim {
                a.swap(col * dim + c, pivot * dim + c);
            }
            det = -det;
        }
        let p = a[col * dim + col];
        det *= p;
        for row in col + 1..dim {
            let f = a[row * dim + col] / p;
            for c in col..dim {
                a[row * dim + c] -= f * a[col * dim + c];
            }
        }
    }
    det
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarCheck {
    pub dim: usize,
    /// Base-model `var[y_i]`.
    pub var_y: f64,
    pub se_var_y: f64,
    /// `E[var[y_i | zeta]]` under q.
    pub expected_cond_var: f64,
    pub se_expected_cond_var: f64,
    /// `var[E[y_i | zeta]]` under q, bias-corrected for the inner sample size.
    pub var_cond_mean: f64,
    pub gap: f64,
    pub combined_se: f64,
    pub verdict: Verdict,
    /// The gap is within the decision band: consistent with equality, which holds
    /// only when `E[y_i | zeta]` is constant.
    pub equality_flagged: bool,
}

/// `var[y_i] >= E[var[y_i | zeta]]` for component `dim`.
pub fn check_total_variance_scalar(draws: &PairedDraws, dim: usize) -> Result<ScalarCheck> {
    if dim >= draws.dim {
        return Err(UevError::DimensionMismatch {
            expected: draws.dim,
            got: dim + 1,
            context: "component index",
        });
    }
    let d = draws.dim;
    let diag = dim * d + dim;
    let mut base = Moments::zero(d);
    for i in 0..draws.m {
        base.add(&Moments::of(draws.block(&draws.y_marginal, i), d));
    }
    let var_y = base.covariance()[diag];
    let mean_y = base.mean()[dim];
    let n = base.n;
    let m4 = draws
        .y_marginal
        .chunks_exact(d)
        .map(|p| (p[dim] - mean_y).powi(4))
        .sum::<f64>()
        / n;
    let se_var_y = ((m4 - var_y * var_y).max(0.0) / n).sqrt();

    let groups: Vec<Moments> = (0..draws.m)
        .map(|i| Moments::of(draws.block(&draws.y_given_zeta, i), d))
        .collect();
    let cond_vars: Vec<f64> = groups.iter().map(|g| g.covariance()[diag]).collect();
    let cond_means: Vec<f64> = groups.iter().map(|g| g.mean()[dim]).collect();
    let (expected_cond_var, se_expected_cond_var) = mean_and_se(&cond_vars);
    let (_, se_means) = mean_and_se(&cond_means);
    let var_means = se_means * se_means * draws.m as f64;
    let var_cond_mean = var_means - expected_cond_var / draws.k as f64;

    let gap = var_y - expected_cond_var;
    let combined_se = (se_var_y * se_var_y + se_expected_cond_var * se_expected_cond_var).sqrt();
    let verdict = decide(gap, combined_se);
    Ok(ScalarCheck {
        dim,
        var_y,
        se_var_y,
        expected_cond_var,
        se_expected_cond_var,
        var_cond_mean,
        gap,
        combined_se,
        verdict,
        equality_flagged: verdict == Verdict::Inconclusive,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetCheck {
    pub det_cov_y: f64,
    pub det_expected_cond_cov: f64,
    pub gap: f64,
    pub bootstrap_se: f64,
    pub replicates: usize,
    pub verdict: Verdict,
    pub equality_flagged: bool,
    /// Either determinant estimate fell below 1e-12.
    pub singular: bool,
}

/// `det cov[y] >= det E[cov[y | zeta]]`, with a bootstrap over outer draws.
pub fn check_total_covariance_det(draws: &PairedDraws) -> Result<DetCheck> {
    let d = draws.dim;
    let base_blocks: Vec<Moments> = (0..draws.m)
        .map(|i| Moments::of(draws.block(&draws.y_marginal, i), d))
        .collect();
    let cond_covs: Vec<Vec<f64>> = (0..draws.m)
        .map(|i| Moments::of(draws.block(&draws.y_given_zeta, i), d).covariance())
        .collect();

    let estimate = |idx: &mut dyn Iterator<Item = usize>| {
        let mut base = Moments::zero(d);
        let mut cond = vec![0.0; d * d];
        let mut count = 0.0f64;
        for i in idx {
            base.add(&base_blocks[i]);
            cond.iter_mut().zip(&cond_covs[i]).for_each(|(a, b)| *a += b);
            count += 1.0;
        }
        cond.iter_mut().for_each(|c| *c /= count);
        (determinant(base.covariance(), d), determinant(cond, d))
    };

    let (det_cov_y, det_expected_cond_cov) = estimate(&mut (0..draws.m));
    let gap = det_cov_y - det_expected_cond_cov;

    let mut rng = rng_from_seed(derive_seed(draws.seed, streams::BOOTSTRAP));
    let gaps: Vec<f64> = (0..BOOTSTRAP_REPLICATES)
        .map(|_| {
            let picks: Vec<usize> = (0..draws.m).map(|_| rng.random_range(0..draws.m)).collect();
            let (a, b) = estimate(&mut picks.into_iter());
            a - b
        })
        .collect();
    let (_, se_of_mean) = mean_and_se(&gaps);
    let bootstrap_se = se_of_mean * (BOOTSTRAP_REPLICATES as f64).sqrt();
    let verdict = decide(gap, bootstrap_se);
    Ok(DetCheck {
        det_cov_y,
        det_expected_cond_cov,
        gap,
        bootstrap_se,
        replicates: BOOTSTRAP_REPLICATES,
        verdict,
        equality_flagged: verdict == Verdict::Inconclusive,
        singular: det_cov_y < SINGULAR_DET || det_expected_cond_cov < SINGULAR_DET,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureCheck {
    pub applicable: bool,
    pub verdict: Option<Verdict>,
    pub note: String,
}

/// Structural condition for factorized evidence `q(y | zeta) = prod_i q(y_i | zeta)`:
/// each `y_i` must link to exactly one zeta component and exactly one latent
/// component, and no two `y_i` may share either.
///
/// `model_links[i]` lists the latent parents of `y_i`; `evidence_links[i]` the
/// zeta components `q(y_i | zeta)` depends on.
pub fn check_factorization_structure(
    model_links: &[Vec<usize>],
    evidence_links: &[Vec<usize>],
    evidence_factorized: bool,
) -> StructureCheck {
    let d = model_links.len();
    if d <= 1 {
        return StructureCheck {
            applicable: false,
            verdict: None,
            note: "trivially satisfied: x, y and zeta are one-dimensional".into(),
        };
    }
    if !evidence_factorized {
        return StructureCheck {
            applicable: false,
            verdict: None,
            note: "evidence does not factorize over components of y".into(),
        };
    }
    let mut problems = Vec::new();
    if evidence_links.len() != d {
        problems.push(format!("{} evidence links declared for {d} observables", evidence_links.len()));
    }
    for (name, links) in [("latent parent", model_links), ("zeta component", evidence_links)] {
        for (i, l) in links.iter().enumerate() {
            if l.len() != 1 {
                problems.push(format!("y_{i} links to {} {name}s, expected exactly one", l.len()));
            }
            for (j, other) in links.iter().enumerate().skip(i + 1) {
                if let Some(shared) = l.iter().find(|v| other.contains(v)) {
                    problems.push(format!("y_{i} and y_{j} share {name} {shared}"));
                }
            }
        }
    }
    let verdict = if problems.is_empty() { Verdict::Pass } else { Verdict::Fail };
    StructureCheck {
        applicable: true,
        verdict: Some(verdict),
        note: if problems.is_empty() {
            "each y_i has a unique zeta_i and a unique latent parent x_i".into()
        } else {
            problems.join("; ")
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub scalar_checks: Vec<ScalarCheck>,
    pub det_check: DetCheck,
    pub structure_check: StructureCheck,
    pub condition1_note: String,
    /// Fail if any check fails, pass if every applicable check passes.
    pub verdict: Verdict,
}

pub fn consistency_report(draws: &PairedDraws, structure_check: StructureCheck) -> Result<ConsistencyReport> {
    let scalar_checks = (0..draws.dim)
        .map(|i| check_total_variance_scalar(draws, i))
        .collect::<Result<Vec<_>>>()?;
    let det_check = check_total_covariance_det(draws)?;
    let verdicts: Vec<Verdict> = scalar_checks
        .iter()
        .map(|c| c.verdict)
        .chain([det_check.verdict])
        .chain(structure_check.verdict)
        .collect();
    let verdict = if verdicts.contains(&Verdict::Fail) {
        Verdict::Fail
    } else if verdicts.iter().all(|v| *v == Verdict::Pass) {
        Verdict::Pass
    } else {
        Verdict::Inconclusive
    };
    Ok(ConsistencyReport {
        scalar_checks,
        det_check,
        structure_check,
        condition1_note: CONDITION1_NOTE.into(),
        verdict,
    })
}

//! Exact updates on finite joint tables `p(y_k, x_j)`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, UevError};

const MASS_TOL: f64 = 1e-12;

/// Dense joint table; `probs[k][j] = p(y_k, x_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawJointTable", into = "RawJointTable")]
pub struct JointTable {
    x_values: Vec<f64>,
    y_values: Vec<f64>,
    probs: Vec<Vec<f64>>,
    y_marginal: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawJointTable {
    x_values: Vec<f64>,
    y_values: Vec<f64>,
    probs: Vec<Vec<f64>>,
}

impl TryFrom<RawJointTable> for JointTable {
    type Error = UevError;

    fn try_from(raw: RawJointTable) -> Result<Self> {
        JointTable::new(raw.x_values, raw.y_values, raw.probs)
    }
}

impl From<JointTable> for RawJointTable {
    fn from(t: JointTable) -> Self {
        RawJointTable {
            x_values: t.x_values,
            y_values: t.y_values,
            probs: t.probs,
        }
    }
}

impl JointTable {
    pub fn new(x_values: Vec<f64>, y_values: Vec<f64>, probs: Vec<Vec<f64>>) -> Result<Self> {
        if x_values.is_empty() || y_values.is_empty() {
            return Err(UevError::InvalidTable("x_values and y_values must be non-empty".into()));
        }
        if probs.len() != y_values.len() || probs.iter().any(|row| row.len() != x_values.len()) {
            return Err(UevError::InvalidTable(format!(
                "probs must be {} rows (y) of {} columns (x)",
                y_values.len(),
                x_values.len()
            )));
        }
        if probs.iter().flatten().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(UevError::InvalidTable("entries must be finite and >= 0".into()));
        }
        let total: f64 = probs.iter().flatten().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(UevError::InvalidTable(format!("total mass is {total}, expected 1")));
        }
        for (name, values) in [("x_values", &x_values), ("y_values", &y_values)] {
            for (i, v) in values.iter().enumerate() {
                if values[..i].contains(v) {
                    return Err(UevError::InvalidTable(format!("duplicate entry {v} in {name}")));
                }
            }
        }
        let y_marginal = probs.iter().map(|row| row.iter().sum()).collect();
        Ok(Self {
            x_values,
            y_values,
            probs,
            y_marginal,
        })
    }

    /// Builds the table from `p(x)` and the rows `p(y | x_j)` (one row per x).
    pub fn from_prior_and_likelihood(
        x_values: Vec<f64>,
        y_values: Vec<f64>,
        prior: &[f64],
        likelihood: &[Vec<f64>],
    ) -> Result<Self> {
        if prior.len() != x_values.len() || likelihood.len() != x_values.len() {
            return Err(UevError::InvalidTable("prior/likelihood shape mismatch".into()));
        }
        let mut probs = vec![vec![0.0; x_values.len()]; y_values.len()];
        for (j, (px, row)) in prior.iter().zip(likelihood).enumerate() {
            if row.len() != y_values.len() {
                return Err(UevError::InvalidTable("likelihood row length mismatch".into()));
            }
            for (k, pyx) in row.iter().enumerate() {
                probs[k][j] = px * pyx;
            }
        }
        Self::new(x_values, y_values, probs)
    }

    pub fn x_values(&self) -> &[f64] {
        &self.x_values
    }

    pub fn y_values(&self) -> &[f64] {
        &self.y_values
    }

    pub fn probs(&self) -> &[Vec<f64>] {
        &self.probs
    }

    /// `p(y_k)`.
    pub fn y_marginal(&self) -> &[f64] {
        &self.y_marginal
    }

    /// `p(x_j)`.
    pub fn x_marginal(&self) -> Vec<f64> {
        (0..self.x_values.len())
            .map(|j| self.probs.iter().map(|row| row[j]).sum())
            .collect()
    }

    /// `p(x | y_k)`; `None` when `p(y_k) = 0`.
    pub fn conditional_x_given_y(&self, k: usize) -> Option<Vec<f64>> {
        let m = self.y_marginal[k];
        (m > 0.0).then(|| self.probs[k].iter().map(|p| p / m).collect())
    }

    /// `p(y_k | x_j)` for every k; uniform when `p(x_j) = 0`.
    pub fn likelihood_row(&self, j: usize) -> Vec<f64> {
        let px: f64 = self.probs.iter().map(|row| row[j]).sum();
        let k = self.y_values.len();
        if px > 0.0 {
            self.probs.iter().map(|row| row[j] / px).collect()
        } else {
            vec![1.0 / k as f64; k]
        }
    }

    pub fn y_index(&self, y: f64) -> Option<usize> {
        self.y_values.iter().position(|&v| v == y)
    }

    fn check_y_len(&self, len: usize, what: &'static str) -> Result<()> {
        if len != self.y_values.len() {
            return Err(UevError::DimensionMismatch {
                expected: self.y_values.len(),
                got: len,
                context: what,
            });
        }
        Ok(())
    }
}

/// Likelihood ratios `lambda_1 : ... : lambda_K`; only ratios carry meaning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct LikelihoodRatios(Vec<f64>);

impl LikelihoodRatios {
    pub fn new(lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() || lambdas.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
            return Err(UevError::InvalidParameter(
                "likelihood ratios must be finite and >= 0".into(),
            ));
        }
        if !lambdas.iter().any(|l| *l > 0.0) {
            return Err(UevError::InvalidParameter(
                "at least one likelihood ratio must be positive".into(),
            ));
        }
        Ok(Self(lambdas))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for LikelihoodRatios {
    type Error = UevError;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<LikelihoodRatios> for Vec<f64> {
    fn from(l: LikelihoodRatios) -> Self {
        l.0
    }
}

fn validate_q(joint: &JointTable, q_y: &[f64]) -> Result<()> {
    joint.check_y_len(q_y.len(), "q over y_values")?;
    if q_y.iter().any(|q| !(*q >= 0.0) || !q.is_finite()) {
        return Err(UevError::InvalidParameter("q must be finite and >= 0".into()));
    }
    let total: f64 = q_y.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(UevError::InvalidParameter(format!("q sums to {total}, expected 1")));
    }
    Ok(())
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    v.iter_mut().for_each(|p| *p /= total);
    v
}

/// Jeffrey's rule `p(x | zeta) = sum_k q(y_k) p(x | y_k)`.
pub fn jeffrey_update_table(joint: &JointTable, q_y: &[f64]) -> Result<Vec<f64>> {
    validate_q(joint, q_y)?;
    let mut out = vec![0.0; joint.x_values.len()];
    for (k, &qk) in q_y.iter().enumerate() {
        if qk == 0.0 {
            continue;
        }
        let cond = joint
            .conditional_x_given_y(k)
            .ok_or(UevError::ZeroMarginal { index: k })?;
        for (o, c) in out.iter_mut().zip(cond) {
            *o += qk * c;
        }
    }
    Ok(normalize(out))
}

/// Virtual evidence: `p(x | zeta) = sum_k lambda_k p(y_k, x) / sum_j lambda_j p(y_j)`.
pub fn virtual_update_table(joint: &JointTable, ratios: &LikelihoodRatios) -> Result<Vec<f64>> {
    joint.check_y_len(ratios.len(), "likelihood ratios")?;
    weighted_x_marginal(joint, ratios.as_slice())
}

fn weighted_x_marginal(joint: &JointTable, weights: &[f64]) -> Result<Vec<f64>> {
    let evidence: f64 = weights
        .iter()
        .zip(&joint.y_marginal)
        .map(|(l, m)| l * m)
        .sum();
    if !(evidence > 0.0) {
        return Err(UevError::DegenerateEvidence(
            "sum_k lambda_k p(y_k) = 0: the evidence has no overlap with the model".into(),
        ));
    }
    let mut out = vec![0.0; joint.x_values.len()];
    for (row, &l) in joint.probs.iter().zip(weights) {
        for (o, p) in out.iter_mut().zip(row) {
            *o += l * p;
        }
    }
    out.iter_mut().for_each(|o| *o /= evidence);
    Ok(out)
}

/// Brute-force posterior of the extended joint `p(zeta | y_k) p(y_k, x)`,
/// marginalizing y and normalizing by `p(zeta)`.
pub fn enumerate_extended_posterior(joint: &JointTable, zeta_lik: &[f64]) -> Result<Vec<f64>> {
    joint.check_y_len(zeta_lik.len(), "p(zeta | y_k) values")?;
    if zeta_lik.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(UevError::InvalidParameter("p(zeta | y_k) must be finite and >= 0".into()));
    }
    let nx = joint.x_values.len();
    // Full extended joint p(zeta, y_k, x_j) for the observed zeta.
    let extended: Vec<Vec<f64>> = joint
        .probs
        .iter()
        .zip(zeta_lik)
        .map(|(row, z)| row.iter().map(|p| z * p).collect())
        .collect();
    let p_zeta: f64 = extended.iter().flatten().sum();
    if !(p_zeta > 0.0) {
        return Err(UevError::DegenerateEvidence("p(zeta) = 0 under the extended joint".into()));
    }
    Ok((0..nx)
        .map(|j| extended.iter().map(|row| row[j]).sum::<f64>() / p_zeta)
        .collect())
}

/// Applies Jeffrey updates in order. Each update replaces the y-marginal and
/// keeps `p(x | y)`, so later evidence overwrites earlier evidence.
pub fn sequential_jeffrey(joint: &JointTable, qs: &[Vec<f64>]) -> Result<Vec<f64>> {
    Ok(sequential_jeffrey_trace(joint, qs)?
        .pop()
        .unwrap_or_else(|| joint.x_marginal()))
}

/// Posterior over x after each step of [`sequential_jeffrey`].
pub fn sequential_jeffrey_trace(joint: &JointTable, qs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    // p(x | y) is untouched by every update, so step i only depends on q_i.
    qs.iter().map(|q| jeffrey_update_table(joint, q)).collect()
}

/// Applies virtual-evidence updates in order by reweighting the joint with each
/// ratio vector in turn.
pub fn sequential_virtual(joint: &JointTable, ratio_list: &[LikelihoodRatios]) -> Result<Vec<f64>> {
    let mut probs = joint.probs.clone();
    for (i, ratios) in ratio_list.iter().enumerate() {
        joint.check_y_len(ratios.len(), "likelihood ratios")?;
        let mut total = 0.0;
        for (row, &l) in probs.iter_mut().zip(ratios.as_slice()) {
            row.iter_mut().for_each(|p| *p *= l);
            total += row.iter().sum::<f64>();
        }
        if !(total > 0.0) {
            return Err(UevError::DegenerateEvidence(format!(
                "evidence {i} leaves zero joint probability; the pieces of evidence contradict each other or the model is misspecified"
            )));
        }
        probs.iter_mut().flatten().for_each(|p| *p /= total);
    }
    let nx = joint.x_values.len();
    Ok(normalize(
        (0..nx).map(|j| probs.iter().map(|row| row[j]).sum()).collect(),
    ))
}

/// Distributional evidence on a finite model:
/// `p(x | y ~ q) ∝ p(x) exp(sum_k q_k ln p(y_k | x))`.
pub fn distributional_update_table(joint: &JointTable, q_y: &[f64]) -> Result<Vec<f64>> {
    validate_q(joint, q_y)?;
    let px = joint.x_marginal();
    let unnorm: Vec<f64> = (0..joint.x_values.len())
        .map(|j| {
            if px[j] == 0.0 {
                return 0.0;
            }
            let lik = joint.likelihood_row(j);
            let expected: f64 = q_y
                .iter()
                .zip(&lik)
                .filter(|(q, _)| **q > 0.0)
                .map(|(q, l)| q * l.ln())
                .sum();
            px[j] * expected.exp()
        })
        .collect();
    let total: f64 = unnorm.iter().sum();
    if !(total > 0.0) {
        return Err(UevError::DegenerateEvidence(
            "no x assigns positive likelihood to every y in the support of q".into(),
        ));
    }
    Ok(unnorm.into_iter().map(|u| u / total).collect())
}

/// Jeffrey distribution equivalent to virtual evidence: `q_k ∝ lambda_k p(y_k)`.
pub fn q_from_ratios(joint: &JointTable, ratios: &LikelihoodRatios) -> Result<Vec<f64>> {
    joint.check_y_len(ratios.len(), "likelihood ratios")?;
    let w: Vec<f64> = ratios
        .as_slice()
        .iter()
        .zip(&joint.y_marginal)
        .map(|(l, m)| l * m)
        .collect();
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(UevError::DegenerateEvidence("sum_k lambda_k p(y_k) = 0".into()));
    }
    Ok(w.into_iter().map(|v| v / total).collect())
}

/// Likelihood ratios equivalent to a Jeffrey distribution: `lambda_k = q_k / p(y_k)`.
pub fn ratios_from_q(joint: &JointTable, q_y: &[f64]) -> Result<LikelihoodRatios> {
    validate_q(joint, q_y)?;
    let lambdas = q_y
        .iter()
        .zip(&joint.y_marginal)
        .enumerate()
        .map(|(k, (q, m))| match (*q > 0.0, *m > 0.0) {
            (false, _) => Ok(0.0),
            (true, true) => Ok(q / m),
            (true, false) => Err(UevError::ZeroMarginal { index: k }),
        })
        .collect::<Result<Vec<_>>>()?;
    LikelihoodRatios::new(lambdas)
}

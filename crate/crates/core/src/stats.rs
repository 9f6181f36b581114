//! Column statistics over utility samples: baseline moments, z-scores and
//! Pearson correlation with explicit handling of constant columns.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::utility::UtilityMatrix;

/// A column whose sample standard deviation is below this is constant.
pub const EPSILON_SIGMA: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineMoments {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub degenerate: Vec<bool>,
    pub sample_count: usize,
}

impl BaselineMoments {
    /// Sample mean and standard deviation (denominator `n - 1`) of each column.
    pub fn from_matrix(x: &UtilityMatrix) -> Result<Self> {
        let n = x.rows();
        if n < 2 {
            return Err(Error::invalid("baseline moments need at least two samples"));
        }
        let mu = x.column_means();
        let mut ss = vec![0.0; x.cols()];
        for i in 0..n {
            for (j, (acc, m)) in ss.iter_mut().zip(&mu).enumerate() {
                let d = x.get(i, j) - m;
                *acc += d * d;
            }
        }
        let sigma: Vec<f64> = ss.iter().map(|s| (s / (n - 1) as f64).sqrt()).collect();
        let degenerate = sigma.iter().map(|s| *s < EPSILON_SIGMA).collect();
        Ok(Self {
            mu,
            sigma,
            degenerate,
            sample_count: n,
        })
    }

    pub fn num_agents(&self) -> usize {
        self.mu.len()
    }
}

/// Output of [`zscore_standardize`].
#[derive(Debug, Clone, PartialEq)]
pub struct Standardized {
    pub matrix: UtilityMatrix,
    pub degenerate: Vec<bool>,
}

/// Maps column `j` through `x -> (x - mu_j) / sigma_j`; constant columns become 0.
pub fn zscore_standardize(x: &UtilityMatrix, moments: &BaselineMoments) -> Result<Standardized> {
    if x.cols() != moments.num_agents() {
        return Err(Error::Dimension(format!(
            "matrix has {} columns but moments describe {} agents",
            x.cols(),
            moments.num_agents()
        )));
    }
    let mut out = x.clone();
    for j in 0..x.cols() {
        if moments.degenerate[j] {
            out.map_column(j, |_| 0.0);
        } else {
            let (mu, sigma) = (moments.mu[j], moments.sigma[j]);
            out.map_column(j, |v| (v - mu) / sigma);
        }
    }
    Ok(Standardized {
        matrix: out,
        degenerate: moments.degenerate.clone(),
    })
}

/// Pairwise Pearson coefficients between agents' utilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationMatrix {
    pub r: Vec<Vec<f64>>,
    pub degenerate_mask: Vec<bool>,
    pub k_used: usize,
    pub d_used: usize,
}

impl RelationMatrix {
    pub fn num_agents(&self) -> usize {
        self.r.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.r[i][j]
    }

    pub fn flattened(&self) -> Vec<f64> {
        self.r.iter().flatten().copied().collect()
    }

    pub fn has_degenerate(&self) -> bool {
        self.degenerate_mask.iter().any(|d| *d)
    }
}

/// Sample Pearson correlation of every column pair.
///
/// Uses centered sums and `sxy / sqrt(sxx·syy)`, so equal columns give exactly
/// 1 and negated columns exactly -1.
pub fn pearson_matrix(x: &UtilityMatrix) -> Result<(Vec<Vec<f64>>, Vec<bool>)> {
    let (n, p) = (x.rows(), x.cols());
    if n < 2 {
        return Err(Error::invalid("correlation needs at least two samples"));
    }
    let mu = x.column_means();
    let mut centered = vec![0.0; n * p];
    for i in 0..n {
        for j in 0..p {
            centered[i * p + j] = x.get(i, j) - mu[j];
        }
    }
    let mut cross = vec![0.0; p * p];
    for row in centered.chunks(p) {
        for a in 0..p {
            for b in a..p {
                cross[a * p + b] += row[a] * row[b];
            }
        }
    }
    let degenerate: Vec<bool> = (0..p)
        .map(|j| (cross[j * p + j] / (n - 1) as f64).sqrt() < EPSILON_SIGMA)
        .collect();
    let mut r = vec![vec![0.0; p]; p];
    for a in 0..p {
        if degenerate[a] {
            continue;
        }
        r[a][a] = 1.0;
        for b in (a + 1)..p {
            if degenerate[b] {
                continue;
            }
            let v = cross[a * p + b] / (cross[a * p + a] * cross[b * p + b]).sqrt();
            let v = v.clamp(-1.0, 1.0);
            r[a][b] = v;
            r[b][a] = v;
        }
    }
    Ok((r, degenerate))
}

/// Population Pearson matrix of a weighted outcome distribution.
///
/// `outcomes[i]` is a utility vector with probability `weights[i]`.
pub fn weighted_pearson(outcomes: &[Vec<f64>], weights: &[f64]) -> Result<(Vec<Vec<f64>>, Vec<bool>)> {
    if outcomes.len() != weights.len() || outcomes.is_empty() {
        return Err(Error::Dimension("outcomes and weights must align".into()));
    }
    let p = outcomes[0].len();
    let total: f64 = weights.iter().sum();
    let mut mu = vec![0.0; p];
    for (o, w) in outcomes.iter().zip(weights) {
        for j in 0..p {
            mu[j] += w * o[j];
        }
    }
    mu.iter_mut().for_each(|m| *m /= total);
    let mut cov = vec![vec![0.0; p]; p];
    for (o, w) in outcomes.iter().zip(weights) {
        for a in 0..p {
            for b in a..p {
                cov[a][b] += w * (o[a] - mu[a]) * (o[b] - mu[b]);
            }
        }
    }
    let degenerate: Vec<bool> = (0..p)
        .map(|j| (cov[j][j] / total).max(0.0).sqrt() < EPSILON_SIGMA)
        .collect();
    let mut r = vec![vec![0.0; p]; p];
    for a in 0..p {
        if degenerate[a] {
            continue;
        }
        r[a][a] = 1.0;
        for b in (a + 1)..p {
            if degenerate[b] {
                continue;
            }
            let v = (cov[a][b] / (cov[a][a] * cov[b][b]).sqrt()).clamp(-1.0, 1.0);
            r[a][b] = v;
            r[b][a] = v;
        }
    }
    Ok((r, degenerate))
}

use serde::{Deserialize, Serialize};

use crate::env::{Environment, ValueFunction};
use crate::error::{Error, Result};

/// Per-agent utility values for one outcome (or an average of outcomes).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UtilityVector(pub Vec<f64>);

impl UtilityVector {
    pub fn zeros(num_agents: usize) -> Self {
        Self(vec![0.0; num_agents])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, agent: usize) -> f64 {
        self.0[agent]
    }

    /// Rejects non-finite entries, naming the first offending agent.
    pub fn ensure_finite(&self, what: &str) -> Result<()> {
        ensure_finite(&self.0, what)
    }
}

pub(crate) fn ensure_finite(values: &[f64], what: &str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(agent) => Err(Error::EstimationFailure {
            agent,
            detail: format!("{what} is {}", values[agent]),
        }),
        None => Ok(()),
    }
}

/// `γ·V(s_next) + R(s_prev, s_next)`, elementwise.
pub fn utility_of_outcome<E: Environment>(
    env: &E,
    values: &dyn ValueFunction<E>,
    s_prev: &E::State,
    s_next: &E::State,
) -> Result<UtilityVector> {
    let p = env.num_agents();
    let v = values.values(env, s_next)?;
    let r = env.reward(s_prev, s_next);
    if v.len() != p || r.len() != p {
        return Err(Error::Dimension(format!(
            "expected {p} entries, value has {} and reward has {}",
            v.len(),
            r.len()
        )));
    }
    ensure_finite(&v, "value")?;
    ensure_finite(&r, "reward")?;
    let gamma = env.discount();
    let u = v.iter().zip(&r).map(|(v, r)| gamma * v + r).collect();
    Ok(UtilityVector(u))
}

/// Row-major `rows × cols` sample matrix; row `j·d + t` holds the utility
/// estimate after step `t` of simulation `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl UtilityMatrix {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::from_vec(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = f64> + '_ {
        self.data.iter().skip(col).step_by(self.cols.max(1)).copied()
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for row in self.data.chunks(self.cols.max(1)) {
            for (s, x) in sums.iter_mut().zip(row) {
                *s += x;
            }
        }
        let n = self.rows as f64;
        sums.into_iter().map(|s| s / n).collect()
    }

    /// Little-endian bytes of every entry, for bit-exact comparisons.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        self.data.iter().flat_map(|x| x.to_le_bytes()).collect()
    }

    pub fn map_column(&mut self, col: usize, f: impl Fn(f64) -> f64) {
        let cols = self.cols;
        for row in self.data.chunks_mut(cols) {
            row[col] = f(row[col]);
        }
    }
}

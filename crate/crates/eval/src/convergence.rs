//! How fast the estimators settle as the number of rollouts grows.
//!
//! SBUE: every size is estimated `reps` times and compared per agent against a
//! single large-k estimate taken as ground truth (RMSE). SICA: every size is
//! estimated `reps` times and the flattened matrices are compared pairwise by
//! cosine similarity; matrices with a degenerate agent are left out and
//! counted.

use serde::{Deserialize, Serialize};

use interplay_core::explain::{sbue, sica};
use interplay_core::{Environment, Error, PinnedActionSet, Result, SeededRng, Simulator};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergenceMethod {
    Sbue,
    Sica,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub method: ConvergenceMethod,
    pub agents: Vec<String>,
    pub sizes: Vec<usize>,
    pub reps: usize,
    /// k of the ground-truth estimate (SBUE only).
    pub truth_k: Option<usize>,
    /// `rmse[agent][size]` (SBUE only); one series per agent.
    pub rmse: Option<Vec<Vec<f64>>>,
    /// Mean pairwise cosine similarity per size (SICA only); `None` when
    /// fewer than two non-degenerate matrices were left.
    pub mean_similarity: Option<Vec<Option<f64>>>,
    /// Matrices excluded per size because some agent was degenerate.
    pub degenerate: Vec<usize>,
}

fn rep_seed(seed: SeededRng, size_index: usize, rep: usize) -> SeededRng {
    seed.derive(1).derive(size_index as u64).derive(rep as u64)
}

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.is_empty() {
        return Err(Error::invalid("convergence needs at least one sample size"));
    }
    if sizes.contains(&0) {
        return Err(Error::invalid("sample sizes must be positive"));
    }
    Ok(())
}

/// Per-agent RMSE of `reps` SBUE estimates per size against one estimate at `truth_k`.
pub fn sbue_convergence<E: Environment>(
    sim: &Simulator<'_, E>,
    state: &E::State,
    pins: &PinnedActionSet<E::Action>,
    sizes: &[usize],
    reps: usize,
    truth_k: usize,
    seed: SeededRng,
) -> Result<ConvergenceReport> {
    check_sizes(sizes)?;
    if reps == 0 || truth_k == 0 {
        return Err(Error::invalid("reps and truth_k must be positive"));
    }
    let truth = sbue(sim, state, pins, truth_k, None, seed.derive(0))?.expected_utility;
    let p = sim.num_agents();
    let mut rmse = vec![vec![0.0; sizes.len()]; p];
    for (s, &k) in sizes.iter().enumerate() {
        let mut sq = vec![0.0; p];
        for rep in 0..reps {
            let e = sbue(sim, state, pins, k, None, rep_seed(seed, s, rep))?.expected_utility;
            for i in 0..p {
                sq[i] += (e.get(i) - truth.get(i)).powi(2);
            }
        }
        for i in 0..p {
            rmse[i][s] = (sq[i] / reps as f64).sqrt();
        }
    }
    Ok(ConvergenceReport {
        method: ConvergenceMethod::Sbue,
        agents: sim.env.agent_names(),
        sizes: sizes.to_vec(),
        reps,
        truth_k: Some(truth_k),
        rmse: Some(rmse),
        mean_similarity: None,
        degenerate: vec![0; sizes.len()],
    })
}

/// Mean pairwise cosine similarity of `reps` SICA matrices per size.
pub fn sica_convergence<E: Environment>(
    sim: &Simulator<'_, E>,
    state: &E::State,
    d: usize,
    sizes: &[usize],
    reps: usize,
    seed: SeededRng,
) -> Result<ConvergenceReport> {
    check_sizes(sizes)?;
    if reps < 2 {
        return Err(Error::invalid("sica convergence needs reps >= 2"));
    }
    let mut similarity = Vec::with_capacity(sizes.len());
    let mut degenerate = Vec::with_capacity(sizes.len());
    for (s, &k) in sizes.iter().enumerate() {
        let mut kept = Vec::with_capacity(reps);
        let mut excluded = 0;
        for rep in 0..reps {
            let m = sica(sim, state, k, d, rep_seed(seed, s, rep))?;
            if m.has_degenerate() {
                excluded += 1;
            } else {
                kept.push(m.flattened());
            }
        }
        similarity.push(mean_pairwise_cosine(&kept));
        degenerate.push(excluded);
    }
    Ok(ConvergenceReport {
        method: ConvergenceMethod::Sica,
        agents: sim.env.agent_names(),
        sizes: sizes.to_vec(),
        reps,
        truth_k: None,
        rmse: None,
        mean_similarity: Some(similarity),
        degenerate,
    })
}

/// Cosine of the angle between two vectors; `None` if either is all zeros.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Option<f64> {
    assert_eq!(a.len(), b.len(), "cosine of vectors with different lengths");
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum();
    let nb: f64 = b.iter().map(|x| x * x).sum();
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some((dot / (na * nb).sqrt()).clamp(-1.0, 1.0))
}

/// Mean cosine similarity over all unordered pairs; `None` with fewer than two vectors.
pub fn mean_pairwise_cosine(vectors: &[Vec<f64>]) -> Option<f64> {
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..vectors.len() {
        for j in i + 1..vectors.len() {
            if let Some(c) = cosine_similarity(&vectors[i], &vectors[j]) {
                total += c;
                pairs += 1;
            }
        }
    }
    (pairs > 0).then(|| total / pairs as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_edge_cases() {
        let a = vec![1.0, -0.5, 0.25, 1.0];
        assert_eq!(cosine_similarity(&a, &a), Some(1.0));
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]), Some(0.0));
        assert_eq!(cosine_similarity(&[1.0, 2.0], &[-1.0, -2.0]), Some(-1.0));
        assert_eq!(cosine_similarity(&[0.0, 0.0], &[1.0, 2.0]), None);
    }

    #[test]
    fn pairwise_mean() {
        let m = vec![1.0, 0.3, 0.3, 1.0];
        assert_eq!(mean_pairwise_cosine(&[m.clone(), m.clone(), m]), Some(1.0));
        assert_eq!(mean_pairwise_cosine(&[vec![1.0, 0.0], vec![0.0, 1.0]]), Some(0.0));
        assert_eq!(mean_pairwise_cosine(&[vec![1.0]]), None);
    }
}

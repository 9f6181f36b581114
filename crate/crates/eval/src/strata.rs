//! Strength-share entropy and equal-count stratification of sampled states.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use interplay_core::{AgentId, Environment, Error, Policy, Result, SeededRng};

const SUM_TOLERANCE: f64 = 1e-9;

/// Shannon entropy (natural log) of a probability vector; `0·ln 0 = 0`.
pub fn strength_entropy(shares: &[f64]) -> Result<f64> {
    if shares.is_empty() || shares.iter().any(|s| !s.is_finite() || *s < 0.0) {
        return Err(Error::invalid("shares must be non-negative and finite"));
    }
    let total: f64 = shares.iter().sum();
    if (total - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::invalid(format!("shares sum to {total}, not 1")));
    }
    Ok(-shares.iter().filter(|s| **s > 0.0).map(|s| s * s.ln()).sum::<f64>())
}

/// Normalises per-agent strength to shares.
pub fn shares(strength: &[f64]) -> Result<Vec<f64>> {
    let total: f64 = strength.iter().sum();
    if strength.iter().any(|s| !s.is_finite() || *s < 0.0) || total <= 0.0 {
        return Err(Error::invalid("strength must be non-negative with a positive total"));
    }
    Ok(strength.iter().map(|s| s / total).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyBands {
    /// Band per input (0 = most imbalanced, 2 = most balanced).
    pub band: Vec<usize>,
    /// Largest entropy in bands 0 and 1.
    pub thresholds: [f64; 2],
}

impl EntropyBands {
    pub fn members(&self, band: usize) -> Vec<usize> {
        (0..self.band.len()).filter(|i| self.band[*i] == band).collect()
    }
}

/// Tertiles of the observed entropies: inputs sorted by entropy (ties by index)
/// are split into three bands whose sizes differ by at most one.
pub fn entropy_bands(entropies: &[f64]) -> Result<EntropyBands> {
    if entropies.len() < 3 {
        return Err(Error::invalid("need at least three states to form three bands"));
    }
    if entropies.iter().any(|e| !e.is_finite()) {
        return Err(Error::invalid("entropies must be finite"));
    }
    let n = entropies.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|a, b| entropies[*a].total_cmp(&entropies[*b]).then(a.cmp(b)));
    let mut band = vec![0; n];
    let mut thresholds = [f64::NEG_INFINITY; 2];
    for (rank, &i) in order.iter().enumerate() {
        let b = rank * 3 / n;
        band[i] = b;
        if b < 2 {
            thresholds[b] = thresholds[b].max(entropies[i]);
        }
    }
    Ok(EntropyBands { band, thresholds })
}

/// States met while playing `games` episodes from `initial` under `policies`
/// (at most `max_steps` each), including the initial state of every episode.
pub fn collect_states<E: Environment>(
    env: &E,
    policies: &[Arc<dyn Policy<E>>],
    initial: &E::State,
    games: usize,
    max_steps: usize,
    seed: SeededRng,
) -> Result<Vec<E::State>> {
    let p = env.num_agents();
    if policies.len() != p {
        return Err(Error::Dimension(format!("{} policies for {p} agents", policies.len())));
    }
    let mut out = Vec::new();
    for g in 0..games {
        let mut rng = seed.stream(g as u64);
        let mut s = initial.clone();
        out.push(s.clone());
        for _ in 0..max_steps {
            if env.is_terminal(&s) {
                break;
            }
            let joint = (0..p)
                .map(|i| policies[i].sample(env, &s, AgentId(i), &mut rng))
                .collect::<Result<Vec<_>>>()?;
            s = env.step(&s, &joint, &mut rng)?;
            out.push(s.clone());
        }
    }
    Ok(out)
}

/// Entropy of the strength shares of each state; errors when the game has no
/// strength notion.
pub fn state_entropies<E: Environment>(env: &E, states: &[E::State]) -> Result<Vec<f64>> {
    states
        .iter()
        .map(|s| {
            let strength = env
                .strength(s)
                .ok_or_else(|| Error::invalid("this game exposes no per-agent strength"))?;
            strength_entropy(&shares(&strength)?)
        })
        .collect()
}

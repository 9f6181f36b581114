//! Monte Carlo state values: play the game to the end with the seat policies
//! and average the final prison terms.

use std::sync::Arc;

use interplay_core::rng::{fingerprint, splitmix64};
use interplay_core::{AgentId, Environment, Error, Policy, Result, SeededRng, SimRng, UtilityVector, ValueFunction};

use super::{CopGame, CopState, NUM_AGENTS};

fn state_seed(state: &CopState, seed: u64) -> Result<SeededRng> {
    let bytes = serde_json::to_vec(state).map_err(|e| Error::invalid(format!("state encoding: {e}")))?;
    Ok(SeededRng::new(splitmix64(seed ^ fingerprint(&bytes))))
}

fn play_out(game: &CopGame, state: &CopState, policies: &[Arc<dyn Policy<CopGame>>], rng: &mut SimRng) -> Result<[f64; NUM_AGENTS]> {
    let mut s = state.clone();
    while !game.is_terminal(&s) {
        let joint = policies
            .iter()
            .enumerate()
            .map(|(i, p)| p.sample(game, &s, AgentId(i), rng))
            .collect::<Result<Vec<_>>>()?;
        s = game.step(&s, &joint, rng)?;
    }
    s.payoffs
        .ok_or_else(|| Error::invalid("finished game has no payoffs recorded"))
}

/// Mean final payoff vector over `n_v` complete rollouts from `state`.
///
/// The random streams are keyed by `seed` and the state's content, so the
/// same state always gets the same estimate. A finished game returns its
/// recorded payoffs.
pub fn cop_value_estimate(
    game: &CopGame,
    state: &CopState,
    policies: &[Arc<dyn Policy<CopGame>>],
    n_v: usize,
    seed: u64,
) -> Result<UtilityVector> {
    if let Some(p) = state.payoffs.filter(|_| game.is_terminal(state)) {
        return Ok(UtilityVector(p.to_vec()));
    }
    if n_v == 0 {
        return Err(Error::invalid("value estimate needs at least one rollout"));
    }
    if policies.len() != NUM_AGENTS {
        return Err(Error::Dimension(format!("{} policies for 3 agents", policies.len())));
    }
    let streams = state_seed(state, seed)?;
    let mut total = [0.0; NUM_AGENTS];
    for j in 0..n_v {
        let payoff = play_out(game, state, policies, &mut streams.stream(j as u64))?;
        for (t, v) in total.iter_mut().zip(payoff) {
            *t += v;
        }
    }
    Ok(UtilityVector(total.iter().map(|t| t / n_v as f64).collect()))
}

/// Reward-to-go value for rollouts: the Monte Carlo estimate before the end,
/// zero once the payoffs have been paid out.
pub struct CopMcValue {
    pub policies: Vec<Arc<dyn Policy<CopGame>>>,
    pub rollouts: usize,
    pub seed: u64,
}

impl ValueFunction<CopGame> for CopMcValue {
    fn values(&self, env: &CopGame, state: &CopState) -> Result<Vec<f64>> {
        if env.is_terminal(state) {
            return Ok(vec![0.0; NUM_AGENTS]);
        }
        Ok(cop_value_estimate(env, state, &self.policies, self.rollouts, self.seed)?.0)
    }
}

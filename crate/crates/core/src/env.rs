//! Game, policy and value-function abstractions.

use std::fmt::{self, Debug};
use std::hash::Hash;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SimRng;

/// Index of an agent, `0..num_agents`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub usize);

impl AgentId {
    pub fn index(self) -> usize {
        self.0
    }

    /// Checks the id against the number of agents in a game.
    pub fn checked(index: usize, num_agents: usize) -> Result<Self> {
        if index < num_agents {
            Ok(AgentId(index))
        } else {
            Err(Error::invalid(format!(
                "agent {index} out of range for a {num_agents}-agent game"
            )))
        }
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One unit's part of a (possibly multi-unit) action.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SubOrder {
    pub unit: String,
    pub order: String,
}

impl SubOrder {
    pub fn new(unit: impl Into<String>, order: impl Into<String>) -> Self {
        Self {
            unit: unit.into(),
            order: order.into(),
        }
    }
}

/// Actions must have a canonical text encoding. It is used for tie-breaking,
/// modal-action counting and serialization, so two equal actions must encode
/// identically and different actions differently.
pub trait GameAction: Clone + Eq + Hash + Debug + Send + Sync {
    fn canonical(&self) -> String;

    /// Decomposition into per-unit sub-orders. Single-unit games keep the default.
    fn sub_orders(&self) -> Vec<SubOrder> {
        vec![SubOrder::new("action", self.canonical())]
    }
}

/// The legal actions of one agent in one state.
#[derive(Debug, Clone, PartialEq)]
pub enum ActionSet<A> {
    /// Complete list, in canonical order.
    Enumerated(Vec<A>),
    /// Too many to list; draw with [`Environment::sample_legal`].
    Sampled,
}

impl<A> ActionSet<A> {
    pub fn enumerated(&self) -> Option<&[A]> {
        match self {
            ActionSet::Enumerated(actions) => Some(actions),
            ActionSet::Sampled => None,
        }
    }
}

/// A multi-agent game: states, joint-action transitions, rewards and discount.
///
/// Implementations are shared by every rollout worker, so they must not hold
/// mutable state.
pub trait Environment: Send + Sync {
    type State: Clone + Debug + Send + Sync;
    type Action: GameAction;

    fn num_agents(&self) -> usize;

    /// Discount factor in `[0, 1]`.
    fn discount(&self) -> f64;

    fn is_terminal(&self, state: &Self::State) -> bool;

    fn legal_actions(&self, state: &Self::State, agent: AgentId) -> ActionSet<Self::Action>;

    fn is_legal(&self, state: &Self::State, agent: AgentId, action: &Self::Action) -> bool;

    /// Uniform draw from the legal set. Games that return [`ActionSet::Sampled`]
    /// must override this.
    fn sample_legal(
        &self,
        state: &Self::State,
        agent: AgentId,
        rng: &mut SimRng,
    ) -> Option<Self::Action> {
        match self.legal_actions(state, agent) {
            ActionSet::Enumerated(actions) => actions.choose(rng).cloned(),
            ActionSet::Sampled => None,
        }
    }

    /// Transition function. Stochastic games draw from `rng`.
    fn step(
        &self,
        state: &Self::State,
        joint: &[Self::Action],
        rng: &mut SimRng,
    ) -> Result<Self::State>;

    /// Whether [`Environment::step`] ignores its random source.
    fn is_deterministic(&self) -> bool {
        true
    }

    /// The successor obtained by picking the most probable outcome of every
    /// random event. Stochastic games must override this.
    fn most_probable_step(&self, state: &Self::State, joint: &[Self::Action]) -> Result<Self::State> {
        use rand::SeedableRng;
        let mut rng = SimRng::seed_from_u64(0);
        self.step(state, joint, &mut rng)
    }

    /// Reward vector of length `num_agents` for the transition `prev -> next`.
    fn reward(&self, prev: &Self::State, next: &Self::State) -> Vec<f64>;

    /// Per-agent strength scalar (e.g. territory count) used by ranking
    /// baselines; `None` when the game has no such notion.
    fn strength(&self, _state: &Self::State) -> Option<Vec<f64>> {
        None
    }

    /// Short labels used in explanation output.
    fn agent_names(&self) -> Vec<String> {
        (0..self.num_agents()).map(|i| format!("agent{i}")).collect()
    }
}

/// A stochastic policy for one seat of a game.
pub trait Policy<E: Environment>: Send + Sync {
    /// Draws a legal action.
    fn sample(
        &self,
        env: &E,
        state: &E::State,
        agent: AgentId,
        rng: &mut SimRng,
    ) -> Result<E::Action>;

    /// Exact probability of `action`, when the policy can compute it.
    fn prob(&self, _env: &E, _state: &E::State, _agent: AgentId, _action: &E::Action) -> Option<f64> {
        None
    }

    /// Deterministic most likely action, when available.
    fn mode(&self, _env: &E, _state: &E::State, _agent: AgentId) -> Result<Option<E::Action>> {
        Ok(None)
    }

    /// True for policies whose modal action cannot be found by counting samples
    /// (free-text generators); probable-action explanations then use [`Policy::mode`].
    fn greedy_decode(&self) -> bool {
        false
    }
}

/// State value per agent (reward-to-go; zero at terminal states).
pub trait ValueFunction<E: Environment>: Send + Sync {
    fn values(&self, env: &E, state: &E::State) -> Result<Vec<f64>>;

    fn evaluate(&self, env: &E, state: &E::State, agent: AgentId) -> Result<f64> {
        let values = self.values(env, state)?;
        values
            .get(agent.index())
            .copied()
            .ok_or_else(|| Error::Dimension(format!("value vector has no entry for agent {agent}")))
    }
}

/// `V ≡ 0`: utilities reduce to accumulated rewards.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroValue;

impl<E: Environment> ValueFunction<E> for ZeroValue {
    fn values(&self, env: &E, _state: &E::State) -> Result<Vec<f64>> {
        Ok(vec![0.0; env.num_agents()])
    }
}

/// Uniform over the legal actions; exposes exact probabilities when the
/// legal set is enumerable.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformPolicy;

impl<E: Environment> Policy<E> for UniformPolicy {
    fn sample(&self, env: &E, state: &E::State, agent: AgentId, rng: &mut SimRng) -> Result<E::Action> {
        env.sample_legal(state, agent, rng).ok_or_else(|| Error::Policy {
            agent: agent.index(),
            detail: "no legal action to sample".into(),
        })
    }

    fn prob(&self, env: &E, state: &E::State, agent: AgentId, action: &E::Action) -> Option<f64> {
        let actions = match env.legal_actions(state, agent) {
            ActionSet::Enumerated(actions) => actions,
            ActionSet::Sampled => return None,
        };
        if actions.is_empty() {
            return None;
        }
        let hit = actions.iter().any(|a| a == action);
        Some(if hit { 1.0 / actions.len() as f64 } else { 0.0 })
    }
}

/// Always plays the same action.
#[derive(Debug, Clone)]
pub struct FixedPolicy<A>(pub A);

impl<E: Environment> Policy<E> for FixedPolicy<E::Action> {
    fn sample(&self, _env: &E, _state: &E::State, _agent: AgentId, _rng: &mut SimRng) -> Result<E::Action> {
        Ok(self.0.clone())
    }

    fn prob(&self, _env: &E, _state: &E::State, _agent: AgentId, action: &E::Action) -> Option<f64> {
        Some(if *action == self.0 { 1.0 } else { 0.0 })
    }

    fn mode(&self, _env: &E, _state: &E::State, _agent: AgentId) -> Result<Option<E::Action>> {
        Ok(Some(self.0.clone()))
    }
}

//! Counterfactual actions from partial queries.
//!
//! A query names sub-orders the alternative must contain (`require`) or must
//! not contain (`forbid`). Candidates are the policy's own sampled actions
//! that pass the frequency cutoff `kappa`, satisfy every constraint and differ
//! from the reference action. Each candidate is scored as
//! `alpha·similarity + beta·z(utility)`, where utilities are z-normalized
//! across the candidate set.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::env::{ActionSet, AgentId, Environment, GameAction, SubOrder};
use crate::error::{Error, Result};
use crate::explain::sbue;
use crate::rng::SeededRng;
use crate::simulate::{PinnedActionSet, Simulator};
use crate::utility::utility_of_outcome;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Require,
    Forbid,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Constraint {
    pub polarity: Polarity,
    #[serde(flatten)]
    pub sub_order: SubOrder,
}

impl Constraint {
    pub fn require(unit: impl Into<String>, order: impl Into<String>) -> Self {
        Self {
            polarity: Polarity::Require,
            sub_order: SubOrder::new(unit, order),
        }
    }

    pub fn forbid(unit: impl Into<String>, order: impl Into<String>) -> Self {
        Self {
            polarity: Polarity::Forbid,
            sub_order: SubOrder::new(unit, order),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CounterfactualQuery<A> {
    pub agent: AgentId,
    pub reference: A,
    pub constraints: Vec<Constraint>,
}

impl<A: GameAction> CounterfactualQuery<A> {
    pub fn new(agent: AgentId, reference: A, constraints: Vec<Constraint>) -> Result<Self> {
        for c in &constraints {
            let contradicted = constraints
                .iter()
                .any(|o| o.sub_order == c.sub_order && o.polarity != c.polarity);
            if contradicted {
                return Err(Error::invalid(format!(
                    "sub-order {}:{} is both required and forbidden",
                    c.sub_order.unit, c.sub_order.order
                )));
            }
        }
        Ok(Self {
            agent,
            reference,
            constraints,
        })
    }
}

/// Constraint check: every required sub-order present, every forbidden one absent.
pub fn satisfies<A: GameAction>(action: &A, constraints: &[Constraint]) -> bool {
    let orders = action.sub_orders();
    constraints.iter().all(|c| {
        let present = orders.contains(&c.sub_order);
        match c.polarity {
            Polarity::Require => present,
            Polarity::Forbid => !present,
        }
    })
}

/// Fraction of units, over the union of units either action orders, whose
/// sub-orders are identical.
pub fn order_similarity<A: GameAction>(a: &A, b: &A) -> f64 {
    let left: HashMap<String, String> = a.sub_orders().into_iter().map(|s| (s.unit, s.order)).collect();
    let right: HashMap<String, String> = b.sub_orders().into_iter().map(|s| (s.unit, s.order)).collect();
    let mut units: Vec<&String> = left.keys().chain(right.keys()).collect();
    units.sort();
    units.dedup();
    if units.is_empty() {
        return 1.0;
    }
    let matching = units
        .iter()
        .filter(|u| matches!((left.get(**u), right.get(**u)), (Some(x), Some(y)) if x == y))
        .count();
    matching as f64 / units.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualParams {
    pub kappa: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Policy draws used to approximate the feasible set.
    pub samples: usize,
    /// Rollouts per candidate for the utility estimate.
    pub utility_samples: usize,
    pub top_n: usize,
    /// Compute candidate utilities by enumerating opponents' actions instead of sampling.
    pub exact_utility: bool,
    /// Use the policy's exact probabilities (when exposed) instead of sample frequencies.
    pub use_policy_prob: bool,
}

impl Default for CounterfactualParams {
    fn default() -> Self {
        Self {
            kappa: 0.0,
            alpha: 1.0,
            beta: 1.0,
            samples: 500,
            utility_samples: 200,
            top_n: 3,
            exact_utility: false,
            use_policy_prob: false,
        }
    }
}

impl CounterfactualParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.kappa) {
            return Err(Error::invalid(format!("kappa {} outside [0, 1]", self.kappa)));
        }
        if self.alpha < 0.0 || self.beta < 0.0 || self.alpha + self.beta <= 0.0 {
            return Err(Error::invalid("alpha and beta must be non-negative with a positive sum"));
        }
        if self.samples == 0 || self.utility_samples == 0 || self.top_n == 0 {
            return Err(Error::invalid("samples, utility_samples and top_n must be at least 1"));
        }
        Ok(())
    }
}

/// Draw counts of one agent's policy, in canonical action order.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSample<A> {
    pub counts: Vec<(A, usize)>,
    pub total: usize,
}

pub fn sample_policy_actions<E: Environment>(
    sim: &Simulator<'_, E>,
    state: &E::State,
    agent: AgentId,
    samples: usize,
    seed: SeededRng,
) -> Result<ActionSample<E::Action>> {
    let policy = sim
        .policies
        .get(agent.index())
        .ok_or_else(|| Error::invalid(format!("no policy for agent {agent}")))?;
    let draws = sim.parallelism.map_range(samples, |j| {
        let mut rng = seed.stream(j as u64);
        policy.sample(sim.env, state, agent, &mut rng)
    })?;
    let mut counts: HashMap<E::Action, usize> = HashMap::new();
    for a in draws {
        *counts.entry(a).or_default() += 1;
    }
    let mut counts: Vec<(E::Action, usize)> = counts.into_iter().collect();
    counts.sort_by_cached_key(|(a, _)| a.canonical());
    Ok(ActionSample { counts, total: samples })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeasibleStatus {
    Ok,
    /// No legal action satisfies the query.
    Unsatisfiable,
    /// Satisfying actions may exist but the sample does not support them; raise K or lower kappa.
    InsufficientSupport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate<A> {
    pub action: A,
    pub frequency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibleSet<A> {
    pub candidates: Vec<Candidate<A>>,
    pub status: FeasibleStatus,
    /// Candidates came from exhaustive enumeration of the legal actions.
    pub from_enumeration: bool,
}

impl<A> FeasibleSet<A> {
    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// Feasible set from an existing sample. At `kappa = 0` an empty sampled set
/// falls back to every enumerated legal action that satisfies the query.
pub fn feasible_from_sample<E: Environment>(
    env: &E,
    state: &E::State,
    query: &CounterfactualQuery<E::Action>,
    sample: &ActionSample<E::Action>,
    kappa: f64,
) -> FeasibleSet<E::Action> {
    let admissible = |a: &E::Action| *a != query.reference && satisfies(a, &query.constraints);
    let candidates: Vec<Candidate<E::Action>> = sample
        .counts
        .iter()
        .map(|(a, c)| (a, *c as f64 / sample.total as f64))
        .filter(|(a, freq)| *freq > kappa && admissible(a))
        .map(|(a, frequency)| Candidate {
            action: a.clone(),
            frequency,
        })
        .collect();
    if !candidates.is_empty() {
        return FeasibleSet {
            candidates,
            status: FeasibleStatus::Ok,
            from_enumeration: false,
        };
    }
    let enumerated = match env.legal_actions(state, query.agent) {
        ActionSet::Enumerated(all) => Some(all.into_iter().filter(|a| admissible(a)).collect::<Vec<_>>()),
        ActionSet::Sampled => None,
    };
    match enumerated {
        Some(all) if all.is_empty() => FeasibleSet {
            candidates: Vec::new(),
            status: FeasibleStatus::Unsatisfiable,
            from_enumeration: true,
        },
        Some(mut all) if kappa == 0.0 => {
            all.sort_by_cached_key(GameAction::canonical);
            let frequency_of = |a: &E::Action| {
                sample
                    .counts
                    .iter()
                    .find(|(s, _)| s == a)
                    .map_or(0.0, |(_, c)| *c as f64 / sample.total as f64)
            };
            FeasibleSet {
                candidates: all
                    .into_iter()
                    .map(|a| Candidate {
                        frequency: frequency_of(&a),
                        action: a,
                    })
                    .collect(),
                status: FeasibleStatus::Ok,
                from_enumeration: true,
            }
        }
        _ => FeasibleSet {
            candidates: Vec::new(),
            status: FeasibleStatus::InsufficientSupport,
            from_enumeration: false,
        },
    }
}

/// Feasible set using exact policy probabilities over the enumerated legal actions.
fn feasible_from_policy_prob<E: Environment>(
    sim: &Simulator<'_, E>,
    state: &E::State,
    query: &CounterfactualQuery<E::Action>,
    kappa: f64,
) -> Option<FeasibleSet<E::Action>> {
    let all = sim.env.legal_actions(state, query.agent).enumerated()?.to_vec();
    let policy = &sim.policies[query.agent.index()];
    let mut probs = Vec::with_capacity(all.len());
    for a in &all {
        probs.push(policy.prob(sim.env, state, query.agent, a)?);
    }
    let admissible: Vec<(E::Action, f64)> = all
        .into_iter()
        .zip(probs)
        .filter(|(a, _)| *a != query.reference && satisfies(a, &query.constraints))
        .collect();
    let status = if admissible.is_empty() {
        FeasibleStatus::Unsatisfiable
    } else {
        FeasibleStatus::Ok
    };
    let mut candidates: Vec<Candidate<E::Action>> = admissible
        .into_iter()
        .filter(|(_, p)| *p > kappa)
        .map(|(action, frequency)| Candidate { action, frequency })
        .collect();
    candidates.sort_by_cached_key(|c| c.action.canonical());
    let status = match (status, candidates.is_empty()) {
        (FeasibleStatus::Ok, true) => FeasibleStatus::InsufficientSupport,
        (s, _) => s,
    };
    Some(FeasibleSet {
        candidates,
        status,
        from_enumeration: true,
    })
}

/// Draws `samples` actions from the agent's policy and filters them by `kappa` and the query.
pub fn feasible_set<E: Environment>(
    sim: &Simulator<'_, E>,
    state: &E::State,
    query: &CounterfactualQuery<E::Action>,
    kappa: f64,
    samples: usize,
    seed: SeededRng,
) -> Result<FeasibleSet<E::Action>> {
    if !(0.0..=1.0).contains(&kappa) {
        return Err(Error::invalid(format!("kappa {kappa} outside [0, 1]")));
    }
    if !sim.env.is_legal(state, query.agent, &query.reference) {
        return Err(Error::IllegalAction {
            agent: query.agent.index(),
            detail: format!("reference action `{}` is not legal", query.reference.canonical()),
        });
    }
    let sample = sample_policy_actions(sim, state, query.agent, samples, seed)?;
    Ok(feasible_from_sample(sim.env, state, query, &sample, kappa))
}

/// Monte Carlo estimate of `agent`'s own expected utility after playing `action`;
/// identical to component `agent` of [`sbue`] with the same seed.
pub fn expected_own_utility<E: Environment>(
    sim: &Simulator<'_, E>,
    state: &E::State,
    agent: AgentId,
    action: &E::Action,
    k_u: usize,
    seed: SeededRng,
) -> Result<f64> {
    let pins = PinnedActionSet::single(agent, action.clone());
    let explanation = sbue(sim, state, &pins, k_u, None, seed)?;
    Ok(explanation.expected_utility.get(agent.index()))
}

/// Exact expected utility by enumerating every opponent joint action with its
/// policy probability. Needs a deterministic game, enumerable legal sets and
/// policies that expose `prob`.
pub fn exact_own_utility<E: Environment>(
    sim: &Simulator<'_, E>,
    state: &E::State,
    agent: AgentId,
    action: &E::Action,
) -> Result<f64> {
    if !sim.env.is_deterministic() {
        return Err(Error::invalid("exact utilities need a deterministic game"));
    }
    if !sim.env.is_legal(state, agent, action) {
        return Err(Error::ConstraintViolation {
            agent: agent.index(),
            depth: 0,
            action: action.canonical(),
        });
    }
    let p = sim.num_agents();
    let mut support: Vec<Vec<(E::Action, f64)>> = Vec::with_capacity(p);
    for i in 0..p {
        if i == agent.index() {
            support.push(vec![(action.clone(), 1.0)]);
            continue;
        }
        let legal = sim
            .env
            .legal_actions(state, AgentId(i))
            .enumerated()
            .ok_or_else(|| Error::invalid(format!("agent {i}'s legal actions are not enumerable")))?
            .to_vec();
        let mut dist = Vec::new();
        for a in legal {
            let prob = sim.policies[i]
                .prob(sim.env, state, AgentId(i), &a)
                .ok_or_else(|| Error::invalid(format!("policy of agent {i} does not expose probabilities")))?;
            if prob > 0.0 {
                dist.push((a, prob));
            }
        }
        if dist.is_empty() {
            return Err(Error::Policy {
                agent: i,
                detail: "policy puts no mass on any legal action".into(),
            });
        }
        support.push(dist);
    }
    let mut total = 0.0;
    let mut index = vec![0usize; p];
    loop {
        let joint: Vec<E::Action> = index.iter().enumerate().map(|(i, &c)| support[i][c].0.clone()).collect();
        let weight: f64 = index.iter().enumerate().map(|(i, &c)| support[i][c].1).product();
        let next = sim.env.most_probable_step(state, &joint)?;
        let u = utility_of_outcome(sim.env, sim.values, state, &next)?;
        total += weight * u.get(agent.index());
        let mut pos = 0;
        loop {
            if pos == p {
                return Ok(total);
            }
            index[pos] += 1;
            if index[pos] < support[pos].len() {
                break;
            }
            index[pos] = 0;
            pos += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCounterfactual<A> {
    pub action: A,
    pub similarity: f64,
    pub expected_own_utility: f64,
    pub normalized_utility: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualResult<A> {
    pub ranked: Vec<ScoredCounterfactual<A>>,
    pub feasible_count: usize,
    pub from_enumeration: bool,
}

/// Scores a feasible set; returns every candidate in ranked order.
pub fn score_candidates<A: GameAction>(
    reference: &A,
    candidates: &[A],
    utilities: &[f64],
    alpha: f64,
    beta: f64,
) -> Vec<ScoredCounterfactual<A>> {
    let n = candidates.len() as f64;
    let mean = utilities.iter().sum::<f64>() / n;
    let sd = (utilities.iter().map(|u| (u - mean).powi(2)).sum::<f64>() / n).sqrt();
    let mut scored: Vec<(String, ScoredCounterfactual<A>)> = candidates
        .iter()
        .zip(utilities)
        .map(|(a, &u)| {
            let similarity = order_similarity(reference, a);
            let normalized_utility = if sd > crate::stats::EPSILON_SIGMA { (u - mean) / sd } else { 0.0 };
            (
                a.canonical(),
                ScoredCounterfactual {
                    action: a.clone(),
                    similarity,
                    expected_own_utility: u,
                    normalized_utility,
                    score: alpha * similarity + beta * normalized_utility,
                },
            )
        })
        .collect();
    scored.sort_by(|(ka, a), (kb, b)| {
        b.score
            .total_cmp(&a.score)
            .then(b.similarity.total_cmp(&a.similarity))
            .then_with(|| ka.as_bytes().cmp(kb.as_bytes()))
    });
    scored.into_iter().map(|(_, s)| s).collect()
}

/// Ranked counterfactual alternatives to `query.reference`.
pub fn counterfactuals<E: Environment>(
    sim: &Simulator<'_, E>,
    state: &E::State,
    query: &CounterfactualQuery<E::Action>,
    params: &CounterfactualParams,
    seed: SeededRng,
) -> Result<CounterfactualResult<E::Action>> {
    params.validate()?;
    let feasible = match params.use_policy_prob {
        true => feasible_from_policy_prob(sim, state, query, params.kappa),
        false => None,
    };
    let feasible = match feasible {
        Some(f) => f,
        None => feasible_set(sim, state, query, params.kappa, params.samples, seed.derive(1))?,
    };
    match feasible.status {
        FeasibleStatus::Ok => {}
        FeasibleStatus::Unsatisfiable => {
            return Err(Error::NoFeasibleAction("no legal action satisfies the query".into()))
        }
        FeasibleStatus::InsufficientSupport => {
            return Err(Error::NoFeasibleAction(
                "no sampled action satisfies the query; raise K or lower kappa".into(),
            ))
        }
    }
    let actions: Vec<E::Action> = feasible.candidates.iter().map(|c| c.action.clone()).collect();
    let utility_seed = seed.derive(2);
    let utilities = if params.exact_utility {
        actions
            .iter()
            .map(|a| exact_own_utility(sim, state, query.agent, a))
            .collect::<Result<Vec<f64>>>()?
    } else {
        actions
            .iter()
            .map(|a| expected_own_utility(sim, state, query.agent, a, params.utility_samples, utility_seed))
            .collect::<Result<Vec<f64>>>()?
    };
    let mut ranked = score_candidates(&query.reference, &actions, &utilities, params.alpha, params.beta);
    ranked.truncate(params.top_n);
    Ok(CounterfactualResult {
        ranked,
        feasible_count: actions.len(),
        from_enumeration: feasible.from_enumeration,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use rand::Rng;

    use super::*;
    use crate::env::{FixedPolicy, Policy, UniformPolicy, ZeroValue};
    use crate::rng::SimRng;
    use crate::testing::{PairGame, PairState, UnitPair, ORDERS};
    use proptest::prelude::*;

    /// Weighted draw over `PairGame::all_actions()`.
    struct Weighted(Vec<f64>);

    impl Policy<PairGame> for Weighted {
        fn sample(&self, _: &PairGame, _: &PairState, _: AgentId, rng: &mut SimRng) -> Result<UnitPair> {
            let all = PairGame::all_actions();
            let u: f64 = rng.gen::<f64>() * self.0.iter().sum::<f64>();
            let mut acc = 0.0;
            for (a, w) in all.iter().zip(&self.0) {
                acc += w;
                if u < acc {
                    return Ok(a.clone());
                }
            }
            Ok(all[all.len() - 1].clone())
        }

        fn prob(&self, _: &PairGame, _: &PairState, _: AgentId, action: &UnitPair) -> Option<f64> {
            let total: f64 = self.0.iter().sum();
            let i = PairGame::all_actions().iter().position(|a| a == action)?;
            Some(self.0[i] / total)
        }
    }

    fn uniform_pols() -> Vec<Arc<dyn Policy<PairGame>>> {
        vec![Arc::new(UniformPolicy), Arc::new(UniformPolicy)]
    }

    fn weighted_pols() -> Vec<Arc<dyn Policy<PairGame>>> {
        let w: Vec<f64> = (1..=9).map(|i| i as f64).collect();
        vec![Arc::new(Weighted(w)), Arc::new(FixedPolicy(UnitPair("left", "hold")))]
    }

    fn query(reference: UnitPair, constraints: Vec<Constraint>) -> CounterfactualQuery<UnitPair> {
        CounterfactualQuery::new(AgentId(0), reference, constraints).unwrap()
    }

    #[test]
    fn similarity_examples() {
        let a = UnitPair("hold", "left");
        assert_eq!(order_similarity(&a, &a), 1.0);
        assert_eq!(order_similarity(&a, &UnitPair("left", "hold")), 0.0);
        assert_eq!(order_similarity(&a, &UnitPair("hold", "right")), 0.5);

        #[derive(Debug, Clone, PartialEq, Eq, Hash)]
        struct Orders(Vec<(&'static str, &'static str)>);
        impl GameAction for Orders {
            fn canonical(&self) -> String {
                format!("{:?}", self.0)
            }
            fn sub_orders(&self) -> Vec<SubOrder> {
                self.0.iter().map(|(u, o)| SubOrder::new(*u, *o)).collect()
            }
        }
        let x = Orders(vec![("a", "h"), ("b", "m"), ("c", "s")]);
        let y = Orders(vec![("a", "h"), ("b", "m"), ("c", "h")]);
        assert!((order_similarity(&x, &y) - 2.0 / 3.0).abs() < 1e-15);
        // units only one side orders count as mismatches
        let z = Orders(vec![("a", "h")]);
        assert!((order_similarity(&x, &z) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn constraint_check() {
        let a = UnitPair("hold", "left");
        assert!(satisfies(&a, &[]));
        assert!(satisfies(&a, &[Constraint::require("u1", "hold")]));
        assert!(!satisfies(&a, &[Constraint::require("u1", "left")]));
        assert!(!satisfies(&a, &[Constraint::forbid("u2", "left")]));
        assert!(satisfies(&a, &[Constraint::forbid("u2", "hold"), Constraint::require("u2", "left")]));
        assert!(CounterfactualQuery::new(
            AgentId(0),
            a,
            vec![Constraint::require("u1", "hold"), Constraint::forbid("u1", "hold")]
        )
        .is_err());
    }

    #[test]
    fn deterministic_policy_yields_its_single_action() {
        let env = PairGame { enumerable: false };
        let pols: Vec<Arc<dyn Policy<PairGame>>> =
            vec![Arc::new(FixedPolicy(UnitPair("left", "left"))), Arc::new(UniformPolicy)];
        let sim = Simulator::new(&env, &pols, &ZeroValue).unwrap();
        let s = PairGame::start();
        let f = feasible_set(&sim, &s, &query(UnitPair("hold", "hold"), vec![]), 0.0, 50, SeededRng::new(0)).unwrap();
        assert_eq!(f.status, FeasibleStatus::Ok);
        assert_eq!(f.candidates.len(), 1);
        assert_eq!(f.candidates[0].action, UnitPair("left", "left"));
        assert_eq!(f.candidates[0].frequency, 1.0);

        // the only sampled action is the reference and nothing can be enumerated
        let f = feasible_set(&sim, &s, &query(UnitPair("left", "left"), vec![]), 0.0, 50, SeededRng::new(0)).unwrap();
        assert!(f.is_empty());
        assert_eq!(f.status, FeasibleStatus::InsufficientSupport);
    }

    #[test]
    fn forbidden_everywhere_without_enumeration_is_flagged() {
        let env = PairGame { enumerable: false };
        let pols: Vec<Arc<dyn Policy<PairGame>>> =
            vec![Arc::new(FixedPolicy(UnitPair("left", "right"))), Arc::new(UniformPolicy)];
        let sim = Simulator::new(&env, &pols, &ZeroValue).unwrap();
        let q = query(UnitPair("hold", "hold"), vec![Constraint::forbid("u1", "left")]);
        let f = feasible_set(&sim, &PairGame::start(), &q, 0.0, 100, SeededRng::new(3)).unwrap();
        assert!(f.is_empty());
        assert_eq!(f.status, FeasibleStatus::InsufficientSupport);
        let err = counterfactuals(&sim, &PairGame::start(), &q, &CounterfactualParams::default(), SeededRng::new(3));
        assert!(matches!(err, Err(Error::NoFeasibleAction(_))));
    }

    #[test]
    fn kappa_zero_with_full_support_matches_brute_force() {
        let env = PairGame { enumerable: true };
        let pols = uniform_pols();
        let sim = Simulator::new(&env, &pols, &ZeroValue).unwrap();
        let reference = UnitPair("left", "hold");
        let q = query(reference.clone(), vec![Constraint::require("u1", "left")]);
        let f = feasible_set(&sim, &PairGame::start(), &q, 0.0, 2000, SeededRng::new(1)).unwrap();
        let mut got: Vec<UnitPair> = f.candidates.iter().map(|c| c.action.clone()).collect();
        got.sort_by_key(|a| a.canonical());
        let mut want: Vec<UnitPair> = PairGame::all_actions()
            .into_iter()
            .filter(|a| a.0 == "left" && *a != reference)
            .collect();
        want.sort_by_key(|a| a.canonical());
        assert_eq!(got, want);
        assert!(!f.from_enumeration);
    }

    #[test]
    fn empty_sample_at_kappa_zero_falls_back_to_enumeration() {
        let env = PairGame { enumerable: true };
        let pols: Vec<Arc<dyn Policy<PairGame>>> =
            vec![Arc::new(FixedPolicy(UnitPair("hold", "hold"))), Arc::new(UniformPolicy)];
        let sim = Simulator::new(&env, &pols, &ZeroValue).unwrap();
        let q = query(UnitPair("hold", "hold"), vec![Constraint::require("u2", "right")]);
        let f = feasible_set(&sim, &PairGame::start(), &q, 0.0, 20, SeededRng::new(0)).unwrap();
        assert!(f.from_enumeration);
        assert_eq!(f.candidates.len(), 3);
        assert!(f.candidates.iter().all(|c| c.frequency == 0.0 && c.action.1 == "right"));

        let f = feasible_set(&sim, &PairGame::start(), &q, 0.1, 20, SeededRng::new(0)).unwrap();
        assert_eq!(f.status, FeasibleStatus::InsufficientSupport);

        let impossible = query(
            UnitPair("hold", "hold"),
            ORDERS.iter().map(|o| Constraint::forbid("u1", *o)).collect(),
        );
        let f = feasible_set(&sim, &PairGame::start(), &impossible, 0.0, 20, SeededRng::new(0)).unwrap();
        assert_eq!(f.status, FeasibleStatus::Unsatisfiable);
    }

    #[test]
    fn illegal_reference_is_rejected() {
        let env = PairGame { enumerable: true };
        let pols = uniform_pols();
        let sim = Simulator::new(&env, &pols, &ZeroValue).unwrap();
        let q = query(UnitPair("jump", "hold"), vec![]);
        assert!(matches!(
            feasible_set(&sim, &PairGame::start(), &q, 0.0, 5, SeededRng::new(0)),
            Err(Error::IllegalAction { .. })
        ));
    }

    #[test]
    fn expected_utility_is_the_sbue_component() {
        let env = PairGame { enumerable: true };
        let pols = uniform_pols();
        let sim = Simulator::new(&env, &pols, &ZeroValue).unwrap();
        let a = UnitPair("right", "right");
        let seed = SeededRng::new(12);
        let u = expected_own_utility(&sim, &PairGame::start(), AgentId(0), &a, 150, seed).unwrap();
        let e = sbue(&sim, &PairGame::start(), &PinnedActionSet::single(AgentId(0), a), 150, None, seed).unwrap();
        assert_eq!(u.to_bits(), e.expected_utility.get(0).to_bits());
    }

    #[test]
    fn exact_utility_against_a_fixed_opponent() {
        let env = PairGame { enumerable: true };
        let pols = weighted_pols();
        let sim = Simulator::new(&env, &pols, &ZeroValue).unwrap();
        for a in PairGame::all_actions() {
            let exact = exact_own_utility(&sim, &PairGame::start(), AgentId(0), &a).unwrap();
            assert_eq!(exact, PairGame::payoff(&a, &UnitPair("left", "hold"))[0]);
            let mc = expected_own_utility(&sim, &PairGame::start(), AgentId(0), &a, 20, SeededRng::new(1)).unwrap();
            assert_eq!(exact, mc);
        }
    }

    #[test]
    fn exact_utility_against_a_uniform_opponent() {
        let env = PairGame { enumerable: true };
        let pols = uniform_pols();
        let sim = Simulator::new(&env, &pols, &ZeroValue).unwrap();
        let a = UnitPair("hold", "right");
        let exact = exact_own_utility(&sim, &PairGame::start(), AgentId(0), &a).unwrap();
        let all = PairGame::all_actions();
        let want: f64 = all.iter().map(|b| PairGame::payoff(&a, b)[0]).sum::<f64>() / all.len() as f64;
        assert!((exact - want).abs() < 1e-12);
    }

    #[test]
    fn score_heads_for_extreme_weights() {
        let reference = UnitPair("hold", "hold");
        let cands = vec![UnitPair("hold", "left"), UnitPair("left", "right"), UnitPair("right", "left")];
        let utils = [0.0, 3.0, 1.0];
        let by_sim = score_candidates(&reference, &cands, &utils, 1.0, 0.0);
        assert_eq!(by_sim[0].action, UnitPair("hold", "left"));
        let by_util = score_candidates(&reference, &cands, &utils, 0.0, 1.0);
        assert_eq!(by_util[0].action, UnitPair("left", "right"));
        // equal scores fall back to similarity, then canonical order
        let flat = score_candidates(&reference, &cands, &[1.0, 1.0, 1.0], 0.0, 1.0);
        assert_eq!(flat[0].action, UnitPair("hold", "left"));
        assert_eq!(flat[1].action, UnitPair("left", "right"));
        assert!(flat.iter().all(|s| s.normalized_utility == 0.0));
    }

    #[test]
    fn end_to_end_ranking() {
        let env = PairGame { enumerable: true };
        let pols = weighted_pols();
        let sim = Simulator::new(&env, &pols, &ZeroValue).unwrap();
        let q = query(UnitPair("left", "hold"), vec![Constraint::forbid("u1", "left")]);
        let params = CounterfactualParams {
            exact_utility: true,
            top_n: 10,
            ..Default::default()
        };
        let res = counterfactuals(&sim, &PairGame::start(), &q, &params, SeededRng::new(2)).unwrap();
        assert_eq!(res.feasible_count, 6);
        assert_eq!(res.ranked.len(), 6);
        assert!(res.ranked.iter().all(|s| s.action.0 != "left"));
        for w in res.ranked.windows(2) {
            assert!(w[0].score >= w[1].score);
        }
        let head = &res.ranked[0];
        assert_eq!(head.action, UnitPair("hold", "right"));

        let with_prob = CounterfactualParams {
            use_policy_prob: true,
            ..params
        };
        let res2 = counterfactuals(&sim, &PairGame::start(), &q, &with_prob, SeededRng::new(2)).unwrap();
        assert_eq!(res2.ranked, res.ranked);
        assert!(res2.from_enumeration);

        let bad = CounterfactualParams { kappa: 1.5, ..params };
        assert!(counterfactuals(&sim, &PairGame::start(), &q, &bad, SeededRng::new(2)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn raising_kappa_never_adds_candidates(k1 in 0.001f64..0.3, dk in 0.0f64..0.3, seed in any::<u64>()) {
            let env = PairGame { enumerable: true };
            let pols = weighted_pols();
            let sim = Simulator::new(&env, &pols, &ZeroValue).unwrap();
            let q = query(UnitPair("hold", "hold"), vec![Constraint::forbid("u2", "left")]);
            let lo = feasible_set(&sim, &PairGame::start(), &q, k1, 300, SeededRng::new(seed)).unwrap();
            let hi = feasible_set(&sim, &PairGame::start(), &q, k1 + dk, 300, SeededRng::new(seed)).unwrap();
            for c in &hi.candidates {
                prop_assert!(lo.candidates.iter().any(|l| l.action == c.action));
            }
        }

        #[test]
        fn shifting_utilities_keeps_the_ranking(shift in -1e3f64..1e3, utils in proptest::collection::vec(-10.0f64..10.0, 4)) {
            let reference = UnitPair("hold", "hold");
            let cands = vec![
                UnitPair("hold", "left"),
                UnitPair("left", "right"),
                UnitPair("right", "left"),
                UnitPair("left", "left"),
            ];
            let a = score_candidates(&reference, &cands, &utils, 1.0, 1.0);
            let shifted: Vec<f64> = utils.iter().map(|u| u + shift).collect();
            let b = score_candidates(&reference, &cands, &shifted, 1.0, 1.0);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x.normalized_utility - y.normalized_utility).abs() < 1e-6);
            }
            let order_a: Vec<_> = a.iter().map(|s| s.action.clone()).collect();
            let order_b: Vec<_> = b.iter().map(|s| s.action.clone()).collect();
            // ties within float noise may reorder; only compare when scores are well separated
            let separated = a.windows(2).all(|w| (w[0].score - w[1].score).abs() > 1e-6);
            if separated {
                prop_assert_eq!(order_a, order_b);
            }
        }
    }
}

//! Explanation methods built on [`Simulator`]:
//!
//! * strategy-based utility explanations (`sbue`): expected utility of every
//!   agent when some actions are pinned, optionally z-standardized against an
//!   unconstrained baseline;
//! * shared-interest correlation (`sica`): Pearson matrix of agents' sampled
//!   utilities under unconstrained play;
//! * probable actions and greedy probable trajectories;
//! * friend/enemy rankings read off a relation matrix.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::env::{AgentId, Environment, GameAction};
use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::simulate::{PinDescription, PinnedActionSet, Simulator};
use crate::stats::{pearson_matrix, zscore_standardize, BaselineMoments, RelationMatrix};
use crate::utility::UtilityVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizedUtility {
    pub values: UtilityVector,
    pub degenerate: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbueExplanation {
    pub expected_utility: UtilityVector,
    pub standardized: Option<StandardizedUtility>,
    pub k_used: usize,
    pub pinned: Vec<PinDescription>,
}

/// Expected utility of every agent after one step with `pins` injected.
///
/// With `baseline`, the sampled utilities are also z-standardized against it
/// before averaging.
pub fn sbue<E: Environment>(
    sim: &Simulator<'_, E>,
    state: &E::State,
    pins: &PinnedActionSet<E::Action>,
    k: usize,
    baseline: Option<&BaselineMoments>,
    seed: SeededRng,
) -> Result<SbueExplanation> {
    if pins.is_empty() {
        return Err(Error::invalid("sbue needs at least one pinned action"));
    }
    let x = sim.simulate(state, k, 1, pins, seed)?;
    let standardized = match baseline {
        Some(moments) => {
            let z = zscore_standardize(&x, moments)?;
            Some(StandardizedUtility {
                values: UtilityVector(z.matrix.column_means()),
                degenerate: z.degenerate,
            })
        }
        None => None,
    };
    Ok(SbueExplanation {
        expected_utility: UtilityVector(x.column_means()),
        standardized,
        k_used: k,
        pinned: pins.describe(),
    })
}

/// Pearson correlation of agents' utilities over `k` unconstrained rollouts of depth `d`.
pub fn sica<E: Environment>(
    sim: &Simulator<'_, E>,
    state: &E::State,
    k: usize,
    d: usize,
    seed: SeededRng,
) -> Result<RelationMatrix> {
    if k * d < 2 {
        return Err(Error::invalid("sica needs at least two samples (k·d >= 2)"));
    }
    let x = sim.simulate(state, k, d, &PinnedActionSet::new(), seed)?;
    let (r, degenerate_mask) = pearson_matrix(&x)?;
    Ok(RelationMatrix {
        r,
        degenerate_mask,
        k_used: k,
        d_used: d,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionFrequency<A> {
    pub action: A,
    pub frequency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentProbableAction<A> {
    pub agent: AgentId,
    pub modal: A,
    pub frequency: f64,
    /// Every observed action, most frequent first.
    pub distribution: Vec<ActionFrequency<A>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbableActions<A> {
    pub agents: Vec<AgentProbableAction<A>>,
    pub k_used: usize,
    /// Some modal actions came from greedy decoding instead of sample counts;
    /// they can differ from what the policy usually does.
    pub greedy_decode: bool,
}

impl<A> ProbableActions<A> {
    pub fn for_agent(&self, agent: AgentId) -> Option<&AgentProbableAction<A>> {
        self.agents.iter().find(|a| a.agent == agent)
    }
}

/// Most common action of every non-pinned agent across `k` one-step draws with `pins` applied.
///
/// Ties go to the smallest canonical encoding (byte order).
pub fn probable_actions<E: Environment>(
    sim: &Simulator<'_, E>,
    state: &E::State,
    pins: &PinnedActionSet<E::Action>,
    k: usize,
    seed: SeededRng,
) -> Result<ProbableActions<E::Action>>
where
    E::Action: Serialize,
{
    if k == 0 {
        return Err(Error::invalid("probable actions need k >= 1"));
    }
    if sim.env.is_terminal(state) {
        return Err(Error::invalid("no actions are taken in a terminal state"));
    }
    let p = sim.num_agents();
    let greedy: Vec<bool> = sim.policies.iter().map(|pol| pol.greedy_decode()).collect();
    let mut greedy_modes = vec![None; p];
    for (i, is_greedy) in greedy.iter().enumerate() {
        if *is_greedy && !pins.is_pinned(AgentId(i), 0) {
            greedy_modes[i] = sim.policies[i].mode(sim.env, state, AgentId(i))?;
        }
    }

    let draws = sim.parallelism.map_range(k, |j| {
        let mut rng = seed.stream(j as u64);
        let mut joint = sim.draw_joint(state, &mut rng)?;
        sim.apply_pins(state, &mut joint, pins.at_depth(0))?;
        Ok(joint)
    })?;

    let mut agents = Vec::new();
    for i in 0..p {
        let agent = AgentId(i);
        if pins.is_pinned(agent, 0) {
            continue;
        }
        if let Some(mode) = &greedy_modes[i] {
            agents.push(AgentProbableAction {
                agent,
                modal: mode.clone(),
                frequency: 1.0,
                distribution: vec![ActionFrequency {
                    action: mode.clone(),
                    frequency: 1.0,
                }],
            });
            continue;
        }
        let mut counts: HashMap<&E::Action, usize> = HashMap::new();
        for joint in &draws {
            *counts.entry(&joint[i]).or_default() += 1;
        }
        let mut ranked: Vec<(String, &E::Action, usize)> =
            counts.into_iter().map(|(a, c)| (a.canonical(), a, c)).collect();
        ranked.sort_by(|x, y| y.2.cmp(&x.2).then_with(|| x.0.as_bytes().cmp(y.0.as_bytes())));
        let distribution: Vec<ActionFrequency<E::Action>> = ranked
            .iter()
            .map(|(_, a, c)| ActionFrequency {
                action: (*a).clone(),
                frequency: *c as f64 / k as f64,
            })
            .collect();
        let head = &distribution[0];
        agents.push(AgentProbableAction {
            agent,
            modal: head.action.clone(),
            frequency: head.frequency,
            distribution,
        });
    }
    Ok(ProbableActions {
        agents,
        k_used: k,
        greedy_decode: greedy_modes.iter().any(Option::is_some),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbableTurn<A> {
    pub actions: ProbableActions<A>,
    /// The joint action applied to advance the state (pins plus modal actions).
    pub joint: Vec<A>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbableTrajectory<A> {
    pub turns: Vec<ProbableTurn<A>>,
    /// The game ended before the requested horizon.
    pub truncated: bool,
}

/// Greedy multi-turn extension of [`probable_actions`].
///
/// Turn `t` pins the entries of `pins` at depth `t`, takes every other agent's
/// modal action, and advances along the most probable transition. Counts are
/// pooled per turn.
pub fn probable_trajectory<E: Environment>(
    sim: &Simulator<'_, E>,
    state: &E::State,
    pins: &PinnedActionSet<E::Action>,
    k: usize,
    horizon: usize,
    seed: SeededRng,
) -> Result<ProbableTrajectory<E::Action>>
where
    E::Action: Serialize,
{
    if horizon == 0 {
        return Err(Error::invalid("trajectory horizon must be at least 1"));
    }
    let mut current = state.clone();
    let mut turns = Vec::with_capacity(horizon);
    for t in 0..horizon {
        if sim.env.is_terminal(&current) {
            return Ok(ProbableTrajectory {
                turns,
                truncated: true,
            });
        }
        let turn_pins = pins.rebased(t);
        let turn_seed = if t == 0 { seed } else { seed.derive(t as u64) };
        let actions = probable_actions(sim, &current, &turn_pins, k, turn_seed)?;
        let mut joint: Vec<Option<E::Action>> = vec![None; sim.num_agents()];
        for pin in turn_pins.iter() {
            joint[pin.agent.index()] = Some(pin.action.clone());
        }
        for a in &actions.agents {
            joint[a.agent.index()] = Some(a.modal.clone());
        }
        let joint: Vec<E::Action> = joint
            .into_iter()
            .map(|a| a.expect("every agent is either pinned or has a modal action"))
            .collect();
        current = sim.env.most_probable_step(&current, &joint)?;
        turns.push(ProbableTurn { actions, joint });
    }
    Ok(ProbableTrajectory {
        turns,
        truncated: false,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationRanking {
    pub agent: AgentId,
    pub friends: Vec<AgentId>,
    pub enemies: Vec<AgentId>,
}

/// Other agents ordered by shared correlation with `agent`: descending for
/// friends, ascending for enemies. Equal values keep ascending agent order.
pub fn rank_relations(m: &RelationMatrix, agent: AgentId) -> Result<RelationRanking> {
    let p = m.num_agents();
    if p < 2 {
        return Err(Error::invalid("ranking needs at least two agents"));
    }
    let i = AgentId::checked(agent.index(), p)?.index();
    if m.degenerate_mask[i] {
        return Err(Error::DegenerateAgent(i));
    }
    let others: Vec<usize> = (0..p).filter(|j| *j != i).collect();
    let mut friends = others.clone();
    friends.sort_by(|a, b| m.r[i][*b].total_cmp(&m.r[i][*a]).then(a.cmp(b)));
    let mut enemies = others;
    enemies.sort_by(|a, b| m.r[i][*a].total_cmp(&m.r[i][*b]).then(a.cmp(b)));
    Ok(RelationRanking {
        agent,
        friends: friends.into_iter().map(AgentId).collect(),
        enemies: enemies.into_iter().map(AgentId).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Friend,
    Neutral,
    Enemy,
}

/// Display cutoffs for labeling correlation values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelationBands {
    pub friend_threshold: f64,
    pub enemy_threshold: f64,
}

impl Default for RelationBands {
    fn default() -> Self {
        Self {
            friend_threshold: 0.3,
            enemy_threshold: -0.3,
        }
    }
}

impl RelationBands {
    pub fn new(friend_threshold: f64, enemy_threshold: f64) -> Result<Self> {
        if !(friend_threshold > 0.0 && friend_threshold <= 1.0) {
            return Err(Error::invalid("friend threshold must be in (0, 1]"));
        }
        if !(-1.0..0.0).contains(&enemy_threshold) {
            return Err(Error::invalid("enemy threshold must be in [-1, 0)"));
        }
        Ok(Self {
            friend_threshold,
            enemy_threshold,
        })
    }

    pub fn label(&self, r: f64) -> Relation {
        if r >= self.friend_threshold {
            Relation::Friend
        } else if r <= self.enemy_threshold {
            Relation::Enemy
        } else {
            Relation::Neutral
        }
    }
}

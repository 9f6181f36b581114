//! Constrained Monte Carlo rollouts.
//!
//! `simulate` runs `k` independent rollouts of depth `d` from a state. At every
//! step each agent draws an action from its policy; pinned actions for that
//! depth then replace the corresponding draws (the draw still consumes its
//! random numbers). Row `j·d + t` of the result holds
//! `γ^(t+1)·V(s') + Σ_{τ≤t} γ^τ·R(s_τ, s_τ+1)` for simulation `j`.

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::env::{AgentId, Environment, GameAction, Policy, ValueFunction};
use crate::error::{Error, Result};
use crate::parallel::Parallelism;
use crate::rng::{SeededRng, SimRng};
use crate::stats::BaselineMoments;
use crate::utility::{ensure_finite, UtilityMatrix};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PinnedAction<A> {
    pub agent: AgentId,
    pub action: A,
    pub depth: usize,
}

/// Actions injected into rollouts; at most one per `(agent, depth)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PinnedActionSet<A> {
    entries: Vec<PinnedAction<A>>,
}

impl<A> Default for PinnedActionSet<A> {
    fn default() -> Self {
        Self { entries: Vec::new() }
    }
}

/// Serializable description of a pin.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PinDescription {
    pub agent: usize,
    pub depth: usize,
    pub action: String,
}

impl<A: GameAction> PinnedActionSet<A> {
    pub fn new() -> Self {
        Self::default()
    }

    /// One action for one agent at depth 0.
    pub fn single(agent: AgentId, action: A) -> Self {
        Self {
            entries: vec![PinnedAction {
                agent,
                action,
                depth: 0,
            }],
        }
    }

    pub fn insert(&mut self, agent: AgentId, action: A, depth: usize) -> Result<()> {
        if self.entries.iter().any(|e| e.agent == agent && e.depth == depth) {
            return Err(Error::invalid(format!(
                "agent {agent} already has a pinned action at depth {depth}"
            )));
        }
        self.entries.push(PinnedAction { agent, action, depth });
        self.entries.sort_by_key(|e| (e.depth, e.agent));
        Ok(())
    }

    pub fn with(mut self, agent: AgentId, action: A, depth: usize) -> Result<Self> {
        self.insert(agent, action, depth)?;
        Ok(self)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &PinnedAction<A>> {
        self.entries.iter()
    }

    pub fn at_depth(&self, depth: usize) -> impl Iterator<Item = &PinnedAction<A>> {
        self.entries.iter().filter(move |e| e.depth == depth)
    }

    pub fn is_pinned(&self, agent: AgentId, depth: usize) -> bool {
        self.at_depth(depth).any(|e| e.agent == agent)
    }

    /// Pins at `depth`, moved to depth 0.
    pub fn rebased(&self, depth: usize) -> Self {
        Self {
            entries: self
                .at_depth(depth)
                .map(|e| PinnedAction {
                    agent: e.agent,
                    action: e.action.clone(),
                    depth: 0,
                })
                .collect(),
        }
    }

    pub fn describe(&self) -> Vec<PinDescription> {
        self.entries
            .iter()
            .map(|e| PinDescription {
                agent: e.agent.index(),
                depth: e.depth,
                action: e.action.canonical(),
            })
            .collect()
    }
}

/// One line of the optional rollout trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub simulation: usize,
    pub depth: usize,
    pub joint_action: Vec<String>,
    pub reward: Vec<f64>,
}

pub fn write_trace_jsonl<W: Write>(mut out: W, records: &[TraceRecord]) -> std::io::Result<()> {
    for record in records {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// The game, per-seat policies and value function that rollouts run on.
pub struct Simulator<'a, E: Environment> {
    pub env: &'a E,
    pub policies: &'a [Arc<dyn Policy<E>>],
    pub values: &'a dyn ValueFunction<E>,
    pub parallelism: Parallelism,
}

impl<'a, E: Environment> Clone for Simulator<'a, E> {
    fn clone(&self) -> Self {
        Self {
            env: self.env,
            policies: self.policies,
            values: self.values,
            parallelism: self.parallelism,
        }
    }
}

impl<'a, E: Environment> Simulator<'a, E> {
    pub fn new(
        env: &'a E,
        policies: &'a [Arc<dyn Policy<E>>],
        values: &'a dyn ValueFunction<E>,
    ) -> Result<Self> {
        let p = env.num_agents();
        if p < 2 {
            return Err(Error::invalid("a game needs at least two agents"));
        }
        if policies.len() != p {
            return Err(Error::Dimension(format!(
                "{} policies supplied for {p} agents",
                policies.len()
            )));
        }
        let gamma = env.discount();
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::invalid(format!("discount {gamma} outside [0, 1]")));
        }
        Ok(Self {
            env,
            policies,
            values,
            parallelism: Parallelism::default(),
        })
    }

    pub fn with_parallelism(mut self, parallelism: Parallelism) -> Self {
        self.parallelism = parallelism;
        self
    }

    pub fn num_agents(&self) -> usize {
        self.env.num_agents()
    }

    /// One action per agent, drawn in agent order from `rng`.
    pub fn draw_joint(&self, state: &E::State, rng: &mut SimRng) -> Result<Vec<E::Action>> {
        self.policies
            .iter()
            .enumerate()
            .map(|(i, policy)| policy.sample(self.env, state, AgentId(i), rng))
            .collect()
    }

    /// Overwrites the draws of pinned agents, checking legality first.
    pub fn apply_pins<'p>(
        &self,
        state: &E::State,
        joint: &mut [E::Action],
        pins: impl Iterator<Item = &'p PinnedAction<E::Action>>,
    ) -> Result<()>
    where
        E::Action: 'p,
    {
        for pin in pins {
            if !self.env.is_legal(state, pin.agent, &pin.action) {
                return Err(Error::ConstraintViolation {
                    agent: pin.agent.index(),
                    depth: pin.depth,
                    action: pin.action.canonical(),
                });
            }
            joint[pin.agent.index()] = pin.action.clone();
        }
        Ok(())
    }

    fn validate(&self, state: &E::State, k: usize, d: usize, pins: &PinnedActionSet<E::Action>) -> Result<()> {
        if k == 0 || d == 0 {
            return Err(Error::invalid(format!("need k >= 1 and d >= 1 (got k={k}, d={d})")));
        }
        if self.env.is_terminal(state) {
            return Err(Error::invalid("cannot simulate from a terminal state"));
        }
        let p = self.num_agents();
        for pin in pins.iter() {
            if pin.agent.index() >= p {
                return Err(Error::invalid(format!("pinned agent {} out of range", pin.agent)));
            }
            if pin.depth >= d {
                return Err(Error::invalid(format!(
                    "pin for agent {} at depth {} is beyond the rollout depth {d}",
                    pin.agent, pin.depth
                )));
            }
        }
        Ok(())
    }

    fn rollout(
        &self,
        start: &E::State,
        d: usize,
        pins: &PinnedActionSet<E::Action>,
        rng: &mut SimRng,
        out: &mut [f64],
        mut trace: Option<(usize, &mut Vec<TraceRecord>)>,
    ) -> Result<()> {
        let p = self.num_agents();
        let gamma = self.env.discount();
        let mut state = start.clone();
        let mut cumulative = vec![0.0; p];
        let mut discount_t = 1.0;
        for t in 0..d {
            let (next, reward, joint) = if self.env.is_terminal(&state) {
                if let Some(pin) = pins.at_depth(t).next() {
                    return Err(Error::ConstraintViolation {
                        agent: pin.agent.index(),
                        depth: t,
                        action: pin.action.canonical(),
                    });
                }
                (state.clone(), vec![0.0; p], Vec::new())
            } else {
                let mut joint = self.draw_joint(&state, rng)?;
                self.apply_pins(&state, &mut joint, pins.at_depth(t))?;
                let next = self.env.step(&state, &joint, rng)?;
                let reward = self.env.reward(&state, &next);
                (next, reward, joint)
            };
            let value = self.values.values(self.env, &next)?;
            if reward.len() != p || value.len() != p {
                return Err(Error::Dimension(format!(
                    "reward/value vectors must have {p} entries"
                )));
            }
            ensure_finite(&reward, "reward")?;
            ensure_finite(&value, "value")?;
            let row = &mut out[t * p..(t + 1) * p];
            for i in 0..p {
                cumulative[i] += discount_t * reward[i];
                row[i] = discount_t * gamma * value[i] + cumulative[i];
            }
            ensure_finite(row, "utility")?;
            if let Some((j, records)) = trace.as_mut() {
                records.push(TraceRecord {
                    simulation: *j,
                    depth: t,
                    joint_action: joint.iter().map(GameAction::canonical).collect(),
                    reward,
                });
            }
            discount_t *= gamma;
            state = next;
        }
        Ok(())
    }

    /// `k` rollouts of depth `d` from `state` with `pins` injected.
    pub fn simulate(
        &self,
        state: &E::State,
        k: usize,
        d: usize,
        pins: &PinnedActionSet<E::Action>,
        seed: SeededRng,
    ) -> Result<UtilityMatrix> {
        self.validate(state, k, d, pins)?;
        let p = self.num_agents();
        let mut data = vec![0.0; k * d * p];
        self.parallelism.fill_blocks(&mut data, d * p, |j, block| {
            let mut rng = seed.stream(j as u64);
            self.rollout(state, d, pins, &mut rng, block, None)
        })?;
        UtilityMatrix::from_vec(k * d, p, data)
    }

    /// Same as [`Simulator::simulate`], also returning every step's joint action and reward.
    pub fn simulate_traced(
        &self,
        state: &E::State,
        k: usize,
        d: usize,
        pins: &PinnedActionSet<E::Action>,
        seed: SeededRng,
    ) -> Result<(UtilityMatrix, Vec<TraceRecord>)> {
        self.validate(state, k, d, pins)?;
        let p = self.num_agents();
        let runs = self.parallelism.map_range(k, |j| {
            let mut rng = seed.stream(j as u64);
            let mut block = vec![0.0; d * p];
            let mut records = Vec::with_capacity(d);
            self.rollout(state, d, pins, &mut rng, &mut block, Some((j, &mut records)))?;
            Ok((block, records))
        })?;
        let mut data = Vec::with_capacity(k * d * p);
        let mut trace = Vec::with_capacity(k * d);
        for (block, records) in runs {
            data.extend(block);
            trace.extend(records);
        }
        Ok((UtilityMatrix::from_vec(k * d, p, data)?, trace))
    }

    /// Column moments of an unconstrained simulation.
    pub fn baseline_moments(&self, state: &E::State, k: usize, d: usize, seed: SeededRng) -> Result<BaselineMoments> {
        if k < 2 {
            return Err(Error::invalid("baseline moments need k >= 2"));
        }
        let x = self.simulate(state, k, d, &PinnedActionSet::new(), seed)?;
        BaselineMoments::from_matrix(&x)
    }
}

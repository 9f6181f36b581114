//! Small games used by the unit tests.

use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::env::{ActionSet, AgentId, Environment, GameAction, Policy, SubOrder, ValueFunction};
use crate::error::{Error, Result};
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Pick(pub usize);

impl GameAction for Pick {
    fn canonical(&self) -> String {
        format!("pick{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableState {
    pub round: usize,
    pub last: Vec<usize>,
}

type PayoffFn = dyn Fn(&[usize]) -> Vec<f64> + Send + Sync;

/// Repeated simultaneous-move game: every round each agent picks an index,
/// the reward is `payoff(joint)`, and the game ends after `rounds` rounds.
pub struct TableGame {
    pub actions: Vec<usize>,
    pub rounds: usize,
    pub gamma: f64,
    pub enumerable: bool,
    payoff: Box<PayoffFn>,
}

impl TableGame {
    pub fn new(actions: Vec<usize>, payoff: impl Fn(&[usize]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        Self {
            actions,
            rounds: 1,
            gamma: 1.0,
            enumerable: true,
            payoff: Box::new(payoff),
        }
    }

    pub fn rounds(mut self, rounds: usize) -> Self {
        self.rounds = rounds;
        self
    }

    pub fn gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn start(&self) -> TableState {
        TableState {
            round: 0,
            last: Vec::new(),
        }
    }

    pub fn payoff(&self, joint: &[usize]) -> Vec<f64> {
        (self.payoff)(joint)
    }
}

impl Environment for TableGame {
    type State = TableState;
    type Action = Pick;

    fn num_agents(&self) -> usize {
        self.actions.len()
    }

    fn discount(&self) -> f64 {
        self.gamma
    }

    fn is_terminal(&self, state: &TableState) -> bool {
        state.round >= self.rounds
    }

    fn legal_actions(&self, _state: &TableState, agent: AgentId) -> ActionSet<Pick> {
        if self.enumerable {
            ActionSet::Enumerated((0..self.actions[agent.index()]).map(Pick).collect())
        } else {
            ActionSet::Sampled
        }
    }

    fn is_legal(&self, state: &TableState, agent: AgentId, action: &Pick) -> bool {
        !self.is_terminal(state) && action.0 < self.actions[agent.index()]
    }

    fn sample_legal(&self, _state: &TableState, agent: AgentId, rng: &mut SimRng) -> Option<Pick> {
        Some(Pick(rng.gen_range(0..self.actions[agent.index()])))
    }

    fn step(&self, state: &TableState, joint: &[Pick], _rng: &mut SimRng) -> Result<TableState> {
        for (i, a) in joint.iter().enumerate() {
            if !self.is_legal(state, AgentId(i), a) {
                return Err(Error::IllegalAction {
                    agent: i,
                    detail: a.canonical(),
                });
            }
        }
        Ok(TableState {
            round: state.round + 1,
            last: joint.iter().map(|a| a.0).collect(),
        })
    }

    fn reward(&self, _prev: &TableState, next: &TableState) -> Vec<f64> {
        self.payoff(&next.last)
    }
}

/// Fixed mixed strategy over action indices.
pub struct Mixed(pub Vec<f64>);

impl<E> Policy<E> for Mixed
where
    E: Environment<Action = Pick>,
{
    fn sample(&self, _env: &E, _state: &E::State, _agent: AgentId, rng: &mut SimRng) -> Result<Pick> {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, p) in self.0.iter().enumerate() {
            acc += p;
            if u < acc {
                return Ok(Pick(i));
            }
        }
        Ok(Pick(self.0.len() - 1))
    }

    fn prob(&self, _env: &E, _state: &E::State, _agent: AgentId, action: &Pick) -> Option<f64> {
        self.0.get(action.0).copied()
    }
}

pub fn mixed(probs: &[f64]) -> Arc<dyn Policy<TableGame>> {
    Arc::new(Mixed(probs.to_vec()))
}

pub fn fixed(index: usize) -> Arc<dyn Policy<TableGame>> {
    Arc::new(crate::env::FixedPolicy(Pick(index)))
}

/// `V(s) = offset` for non-terminal states, 0 at terminal ones.
pub struct ConstValue(pub Vec<f64>);

impl ValueFunction<TableGame> for ConstValue {
    fn values(&self, env: &TableGame, state: &TableState) -> Result<Vec<f64>> {
        Ok(if env.is_terminal(state) {
            vec![0.0; self.0.len()]
        } else {
            self.0.clone()
        })
    }
}

/// Two-unit orders for agent 0: each unit picks one of `hold`, `left`, `right`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct UnitPair(pub &'static str, pub &'static str);

pub const ORDERS: [&str; 3] = ["hold", "left", "right"];

impl GameAction for UnitPair {
    fn canonical(&self) -> String {
        format!("u1:{} u2:{}", self.0, self.1)
    }

    fn sub_orders(&self) -> Vec<SubOrder> {
        vec![SubOrder::new("u1", self.0), SubOrder::new("u2", self.1)]
    }
}

pub struct PairGame {
    pub enumerable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairState {
    pub done: Option<(UnitPair, UnitPair)>,
}

impl PairGame {
    pub fn all_actions() -> Vec<UnitPair> {
        let mut out = Vec::new();
        for a in ORDERS {
            for b in ORDERS {
                out.push(UnitPair(a, b));
            }
        }
        out
    }

    pub fn start() -> PairState {
        PairState { done: None }
    }

    /// Agent 0 scores one point per unit that differs from agent 1's order on the
    /// same unit, plus a bonus for `right` on u2; agent 1 gets the negation.
    pub fn payoff(a: &UnitPair, b: &UnitPair) -> Vec<f64> {
        let mut score = 0.0;
        if a.0 != b.0 {
            score += 1.0;
        }
        if a.1 != b.1 {
            score += 1.0;
        }
        if a.1 == "right" {
            score += 0.5;
        }
        vec![score, -score]
    }
}

impl Environment for PairGame {
    type State = PairState;
    type Action = UnitPair;

    fn num_agents(&self) -> usize {
        2
    }

    fn discount(&self) -> f64 {
        1.0
    }

    fn is_terminal(&self, state: &PairState) -> bool {
        state.done.is_some()
    }

    fn legal_actions(&self, _state: &PairState, _agent: AgentId) -> ActionSet<UnitPair> {
        if self.enumerable {
            ActionSet::Enumerated(Self::all_actions())
        } else {
            ActionSet::Sampled
        }
    }

    fn is_legal(&self, state: &PairState, _agent: AgentId, action: &UnitPair) -> bool {
        state.done.is_none() && ORDERS.contains(&action.0) && ORDERS.contains(&action.1)
    }

    fn sample_legal(&self, _state: &PairState, _agent: AgentId, rng: &mut SimRng) -> Option<UnitPair> {
        Some(UnitPair(ORDERS[rng.gen_range(0..3)], ORDERS[rng.gen_range(0..3)]))
    }

    fn step(&self, _state: &PairState, joint: &[UnitPair], _rng: &mut SimRng) -> Result<PairState> {
        Ok(PairState {
            done: Some((joint[0].clone(), joint[1].clone())),
        })
    }

    fn reward(&self, _prev: &PairState, next: &PairState) -> Vec<f64> {
        let (a, b) = next.done.as_ref().expect("reward on a finished game");
        Self::payoff(a, b)
    }
}

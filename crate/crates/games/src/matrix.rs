//! Normal-form games: one simultaneous round, payoff tensor indexed by the
//! joint action.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use interplay_core::stats::weighted_pearson;
use interplay_core::{
    ActionSet, AgentId, Environment, Error, GameAction, PinnedActionSet, Policy, RelationMatrix, Result, SimRng,
    UtilityVector,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MatrixAction(pub usize);

impl GameAction for MatrixAction {
    fn canonical(&self) -> String {
        format!("a{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixState {
    /// The joint action once the round has been played.
    pub played: Option<Vec<usize>>,
}

impl MatrixState {
    pub fn initial() -> Self {
        Self { played: None }
    }
}

/// Payoff tensor over the full product of per-agent action lists.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixGame {
    actions: Vec<usize>,
    /// Row-major over joint actions (agent 0 slowest), `p` payoffs per cell.
    payoffs: Vec<f64>,
    gamma: f64,
}

/// On-disk form: `{actions_per_agent, payoffs}` with `payoffs` nested one
/// level per agent and a length-p vector at the leaves.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixGameFile {
    pub actions_per_agent: Vec<usize>,
    pub payoffs: Value,
    #[serde(default)]
    pub gamma: Option<f64>,
}

impl MatrixGame {
    pub fn new(actions: Vec<usize>, payoffs: Vec<f64>) -> Result<Self> {
        let p = actions.len();
        if p < 2 {
            return Err(Error::invalid("a matrix game needs at least two agents"));
        }
        if actions.iter().any(|&n| n == 0) {
            return Err(Error::invalid("every agent needs at least one action"));
        }
        let cells: usize = actions.iter().product();
        if payoffs.len() != cells * p {
            return Err(Error::Dimension(format!(
                "payoff tensor has {} entries, expected {} cells × {p} agents",
                payoffs.len(),
                cells
            )));
        }
        if let Some(i) = payoffs.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("payoff entry {i} is not finite")));
        }
        Ok(Self {
            actions,
            payoffs,
            gamma: 1.0,
        })
    }

    /// Builds the tensor from a function of the joint action.
    pub fn from_fn(actions: Vec<usize>, f: impl Fn(&[usize]) -> Vec<f64>) -> Result<Self> {
        let p = actions.len();
        let mut payoffs = Vec::new();
        for joint in joint_actions(&actions) {
            let cell = f(&joint);
            if cell.len() != p {
                return Err(Error::Dimension(format!("payoff cell has {} entries, expected {p}", cell.len())));
            }
            payoffs.extend(cell);
        }
        Self::new(actions, payoffs)
    }

    /// Payoffs drawn uniformly from `[-1, 1)`.
    pub fn random(actions: Vec<usize>, rng: &mut impl Rng) -> Result<Self> {
        let p = actions.len();
        let cells: usize = actions.iter().product();
        let payoffs = (0..cells * p).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Self::new(actions, payoffs)
    }

    pub fn with_discount(mut self, gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::invalid(format!("discount {gamma} outside [0, 1]")));
        }
        self.gamma = gamma;
        Ok(self)
    }

    pub fn from_file(file: &MatrixGameFile) -> Result<Self> {
        let p = file.actions_per_agent.len();
        let mut payoffs = Vec::new();
        flatten_payoffs(&file.payoffs, &file.actions_per_agent, 0, p, &mut payoffs)?;
        let game = Self::new(file.actions_per_agent.clone(), payoffs)?;
        match file.gamma {
            Some(g) => game.with_discount(g),
            None => Ok(game),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: MatrixGameFile =
            serde_json::from_str(text).map_err(|e| Error::invalid(format!("matrix game JSON: {e}")))?;
        Self::from_file(&file)
    }

    pub fn to_file(&self) -> MatrixGameFile {
        fn nest(game: &MatrixGame, prefix: &mut Vec<usize>) -> Value {
            if prefix.len() == game.actions.len() {
                return serde_json::json!(game.payoff(prefix));
            }
            let n = game.actions[prefix.len()];
            Value::Array(
                (0..n)
                    .map(|a| {
                        prefix.push(a);
                        let v = nest(game, prefix);
                        prefix.pop();
                        v
                    })
                    .collect(),
            )
        }
        MatrixGameFile {
            actions_per_agent: self.actions.clone(),
            payoffs: nest(self, &mut Vec::new()),
            gamma: Some(self.gamma),
        }
    }

    pub fn actions_per_agent(&self) -> &[usize] {
        &self.actions
    }

    fn cell_index(&self, joint: &[usize]) -> usize {
        joint.iter().zip(&self.actions).fold(0, |acc, (&a, &n)| acc * n + a)
    }

    pub fn payoff(&self, joint: &[usize]) -> &[f64] {
        let p = self.actions.len();
        let c = self.cell_index(joint);
        &self.payoffs[c * p..(c + 1) * p]
    }
}

fn flatten_payoffs(v: &Value, actions: &[usize], level: usize, p: usize, out: &mut Vec<f64>) -> Result<()> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::invalid(format!("payoffs: expected an array at nesting level {level}")))?;
    if level == actions.len() {
        if arr.len() != p {
            return Err(Error::Dimension(format!("payoff leaf has {} entries, expected {p}", arr.len())));
        }
        for x in arr {
            out.push(x.as_f64().ok_or_else(|| Error::invalid("payoff entries must be numbers"))?);
        }
        return Ok(());
    }
    if arr.len() != actions[level] {
        return Err(Error::Dimension(format!(
            "payoffs level {level} has {} entries, agent {level} has {} actions",
            arr.len(),
            actions[level]
        )));
    }
    arr.iter().try_for_each(|x| flatten_payoffs(x, actions, level + 1, p, out))
}

/// Every joint action, agent 0 slowest.
pub fn joint_actions(actions: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    let total: usize = actions.iter().product();
    (0..total).map(move |mut c| {
        let mut joint = vec![0; actions.len()];
        for i in (0..actions.len()).rev() {
            joint[i] = c % actions[i];
            c /= actions[i];
        }
        joint
    })
}

impl Environment for MatrixGame {
    type State = MatrixState;
    type Action = MatrixAction;

    fn num_agents(&self) -> usize {
        self.actions.len()
    }

    fn discount(&self) -> f64 {
        self.gamma
    }

    fn is_terminal(&self, state: &MatrixState) -> bool {
        state.played.is_some()
    }

    fn legal_actions(&self, state: &MatrixState, agent: AgentId) -> ActionSet<MatrixAction> {
        if self.is_terminal(state) {
            return ActionSet::Enumerated(Vec::new());
        }
        ActionSet::Enumerated((0..self.actions[agent.index()]).map(MatrixAction).collect())
    }

    fn is_legal(&self, state: &MatrixState, agent: AgentId, action: &MatrixAction) -> bool {
        !self.is_terminal(state) && agent.index() < self.actions.len() && action.0 < self.actions[agent.index()]
    }

    fn step(&self, state: &MatrixState, joint: &[MatrixAction], _rng: &mut SimRng) -> Result<MatrixState> {
        if joint.len() != self.num_agents() {
            return Err(Error::Dimension(format!("joint action has {} entries", joint.len())));
        }
        for (i, a) in joint.iter().enumerate() {
            if !self.is_legal(state, AgentId(i), a) {
                return Err(Error::IllegalAction {
                    agent: i,
                    detail: format!("action {} is not available", a.canonical()),
                });
            }
        }
        Ok(MatrixState {
            played: Some(joint.iter().map(|a| a.0).collect()),
        })
    }

    fn reward(&self, prev: &MatrixState, next: &MatrixState) -> Vec<f64> {
        match (&prev.played, &next.played) {
            (None, Some(joint)) => self.payoff(joint).to_vec(),
            _ => vec![0.0; self.num_agents()],
        }
    }
}

/// One agent's mixed strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MixedPolicy {
    probs: Vec<f64>,
}

impl MixedPolicy {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("mixed policy needs at least one action"));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::invalid("mixed policy probabilities must be finite and non-negative"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("mixed policy sums to {total}, not 1")));
        }
        Ok(Self { probs })
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn pure(n: usize, action: usize) -> Self {
        let mut probs = vec![0.0; n];
        probs[action] = 1.0;
        Self { probs }
    }

    /// Normalized uniform draws (not Dirichlet; any interior point will do for oracle tests).
    pub fn random(n: usize, rng: &mut impl Rng) -> Self {
        let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let mut probs: Vec<f64> = raw.iter().map(|r| r / total).collect();
        let head: f64 = probs[..n - 1].iter().sum();
        probs[n - 1] = (1.0 - head).max(0.0);
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

impl Policy<MatrixGame> for MixedPolicy {
    fn sample(&self, _env: &MatrixGame, _state: &MatrixState, _agent: AgentId, rng: &mut SimRng) -> Result<MatrixAction> {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return Ok(MatrixAction(i));
            }
        }
        let last = self.probs.iter().rposition(|p| *p > 0.0).unwrap_or(self.probs.len() - 1);
        Ok(MatrixAction(last))
    }

    fn prob(&self, _env: &MatrixGame, _state: &MatrixState, _agent: AgentId, action: &MatrixAction) -> Option<f64> {
        Some(self.probs.get(action.0).copied().unwrap_or(0.0))
    }
}

/// Random payoffs and random interior mixed policies, all drawn from one seed.
pub fn random_instance(actions: Vec<usize>, seed: u64) -> Result<(MatrixGame, Vec<MixedPolicy>)> {
    let mut rng = <SimRng as rand::SeedableRng>::seed_from_u64(seed);
    let g = MatrixGame::random(actions.clone(), &mut rng)?;
    let policies = actions.iter().map(|&n| MixedPolicy::random(n, &mut rng)).collect();
    Ok((g, policies))
}

pub fn policy_handles(policies: &[MixedPolicy]) -> Vec<Arc<dyn Policy<MatrixGame>>> {
    policies
        .iter()
        .map(|p| Arc::new(p.clone()) as Arc<dyn Policy<MatrixGame>>)
        .collect()
}

fn check_policies(g: &MatrixGame, policies: &[MixedPolicy]) -> Result<()> {
    if policies.len() != g.num_agents() {
        return Err(Error::Dimension(format!(
            "{} policies for {} agents",
            policies.len(),
            g.num_agents()
        )));
    }
    for (i, (pol, &n)) in policies.iter().zip(&g.actions).enumerate() {
        if pol.probs.len() != n {
            return Err(Error::Dimension(format!(
                "policy of agent {i} covers {} actions, agent has {n}",
                pol.probs.len()
            )));
        }
    }
    Ok(())
}

/// Outcome distribution of one round: every joint action with its probability.
fn outcome_distribution(
    g: &MatrixGame,
    policies: &[MixedPolicy],
    pinned: &PinnedActionSet<MatrixAction>,
) -> Result<Vec<(Vec<usize>, f64)>> {
    check_policies(g, policies)?;
    let mut dists: Vec<Vec<f64>> = policies.iter().map(|p| p.probs.clone()).collect();
    for pin in pinned.iter() {
        if pin.depth != 0 {
            return Err(Error::invalid("a matrix game has a single round; pins must be at depth 0"));
        }
        let i = pin.agent.index();
        if i >= g.num_agents() || pin.action.0 >= g.actions[i] {
            return Err(Error::ConstraintViolation {
                agent: i,
                depth: 0,
                action: pin.action.canonical(),
            });
        }
        dists[i] = vec![0.0; g.actions[i]];
        dists[i][pin.action.0] = 1.0;
    }
    Ok(joint_actions(&g.actions)
        .map(|joint| {
            let w: f64 = joint.iter().enumerate().map(|(i, &a)| dists[i][a]).product();
            (joint, w)
        })
        .filter(|(_, w)| *w > 0.0)
        .collect())
}

/// Exact expected payoff vector by enumerating every joint action; pinned
/// agents play their pinned action with certainty.
pub fn exact_expected_utility(
    g: &MatrixGame,
    policies: &[MixedPolicy],
    pinned: &PinnedActionSet<MatrixAction>,
) -> Result<UtilityVector> {
    let p = g.num_agents();
    let mut u = vec![0.0; p];
    for (joint, w) in outcome_distribution(g, policies, pinned)? {
        for (ui, v) in u.iter_mut().zip(g.payoff(&joint)) {
            *ui += w * v;
        }
    }
    Ok(UtilityVector(u))
}

/// Population Pearson matrix of the payoffs under the exact outcome distribution.
pub fn exact_relation_matrix(g: &MatrixGame, policies: &[MixedPolicy]) -> Result<RelationMatrix> {
    let dist = outcome_distribution(g, policies, &PinnedActionSet::new())?;
    let outcomes: Vec<Vec<f64>> = dist.iter().map(|(j, _)| g.payoff(j).to_vec()).collect();
    let weights: Vec<f64> = dist.iter().map(|(_, w)| *w).collect();
    let (r, degenerate_mask) = weighted_pearson(&outcomes, &weights)?;
    Ok(RelationMatrix {
        r,
        degenerate_mask,
        k_used: 0,
        d_used: 1,
    })
}

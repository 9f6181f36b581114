//! Skirmish: a small simultaneous-orders conquest game.
//!
//! Every owned territory receives exactly one order per turn: `hold`,
//! `reinforce(+n)`, `attack(T)` or `support(T)`. All orders are resolved at
//! once:
//!
//! 1. reinforcements are added (budget `max(1, owned / 3)` per turn);
//! 2. an attack from `S` has strength `armies(S)` plus one per supporting
//!    territory of the same owner; a defender has strength `armies(T)` plus
//!    its owner's supports (only `1` plus supports when `T` is itself
//!    attacking out);
//! 3. when two territories attack each other, the weaker attack fails and
//!    equal attacks both fail;
//! 4. the strongest remaining attack on a target captures it if it is
//!    strictly stronger than the defence and every other attack on it.
//!    The attacker moves `armies - 1` in and leaves one behind.
//!
//! Failed attacks cost nothing and supports are never cut. Combat is
//! deterministic unless `stochastic` is set, in which case a winning attack
//! succeeds with probability `s / (s + opposition)` and the most probable
//! transition coincides with the deterministic rule.
//!
//! The game ends after `max_turns` turns or when at most one agent still owns
//! territory. The reward is the heuristic value on entering the terminal
//! state; the value function is the heuristic on non-terminal states.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use interplay_core::{
    ActionSet, AgentId, Environment, Error, GameAction, Policy, Result, SimRng, SubOrder, ValueFunction,
};

/// Largest joint-order count that is listed exhaustively.
pub const ENUMERATION_LIMIT: usize = 100_000;

/// Attempts before the rejection sampler gives up.
const MAX_REJECTIONS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Order {
    Hold,
    Reinforce(u32),
    Attack(usize),
    Support(usize),
}

/// A full order set: one `(territory, order)` per owned territory, in
/// territory order. Territory names are carried along for encoding only.
#[derive(Clone)]
pub struct SkirmishAction {
    pub orders: Vec<(usize, Order)>,
    names: Arc<Vec<String>>,
}

impl SkirmishAction {
    pub fn order_text(&self, order: &Order) -> String {
        match order {
            Order::Hold => "hold".into(),
            Order::Reinforce(n) => format!("reinforce(+{n})"),
            Order::Attack(t) => format!("attack({})", self.names[*t]),
            Order::Support(t) => format!("support({})", self.names[*t]),
        }
    }

    pub fn reinforcements(&self) -> u32 {
        self.orders
            .iter()
            .map(|(_, o)| if let Order::Reinforce(n) = o { *n } else { 0 })
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.orders.is_empty()
    }
}

impl PartialEq for SkirmishAction {
    fn eq(&self, other: &Self) -> bool {
        self.orders == other.orders
    }
}

impl Eq for SkirmishAction {}

impl Hash for SkirmishAction {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.orders.hash(state);
    }
}

impl fmt::Debug for SkirmishAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SkirmishAction({})", self.canonical())
    }
}

impl Serialize for SkirmishAction {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.sub_orders()
            .into_iter()
            .map(|s| serde_json::json!({"territory": s.unit, "order": s.order}))
            .collect::<Vec<_>>()
            .serialize(serializer)
    }
}

impl GameAction for SkirmishAction {
    fn canonical(&self) -> String {
        if self.orders.is_empty() {
            return "(no orders)".into();
        }
        self.orders
            .iter()
            .map(|(t, o)| format!("{}:{}", self.names[*t], self.order_text(o)))
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn sub_orders(&self) -> Vec<SubOrder> {
        self.orders
            .iter()
            .map(|(t, o)| SubOrder::new(self.names[*t].clone(), self.order_text(o)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SkirmishBoard {
    pub owner: Vec<Option<usize>>,
    pub armies: Vec<u32>,
    pub turn: usize,
    /// Agent whose orders count this step (sequential mode only).
    pub to_move: usize,
}

impl SkirmishBoard {
    pub fn owned_by(&self, agent: usize) -> impl Iterator<Item = usize> + '_ {
        self.owner
            .iter()
            .enumerate()
            .filter(move |(_, o)| **o == Some(agent))
            .map(|(t, _)| t)
    }

    pub fn territory_count(&self, agent: usize) -> usize {
        self.owned_by(agent).count()
    }

    pub fn total_armies(&self) -> u64 {
        self.armies.iter().map(|&a| a as u64).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeuristicWeights {
    pub territory: f64,
    pub army: f64,
}

impl Default for HeuristicWeights {
    fn default() -> Self {
        Self {
            territory: 0.7,
            army: 0.3,
        }
    }
}

/// Board definition file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoardFile {
    pub territories: Vec<TerritorySpec>,
    /// Agent count or list of agent names.
    pub agents: Value,
    #[serde(default)]
    pub weights: Option<HeuristicWeights>,
    #[serde(default)]
    pub max_turns: Option<usize>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub stochastic: bool,
    /// One agent moves per step instead of all at once.
    #[serde(default)]
    pub sequential: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerritorySpec {
    pub id: String,
    /// Agent index or name; `null` for neutral.
    #[serde(default)]
    pub owner: Value,
    pub armies: u32,
    pub adjacent: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct SkirmishGame {
    names: Arc<Vec<String>>,
    adjacency: Vec<Vec<usize>>,
    agents: Vec<String>,
    pub weights: HeuristicWeights,
    pub max_turns: usize,
    pub gamma: f64,
    pub stochastic: bool,
    pub sequential: bool,
    initial: SkirmishBoard,
}

impl SkirmishGame {
    pub fn from_file(file: &BoardFile) -> Result<Self> {
        let agents: Vec<String> = match &file.agents {
            Value::Number(n) => {
                let n = n.as_u64().filter(|&n| n >= 1).ok_or_else(|| Error::invalid("agents must be a positive count"))?;
                (0..n).map(|i| format!("P{i}")).collect()
            }
            Value::Array(items) => items
                .iter()
                .map(|v| v.as_str().map(str::to_string))
                .collect::<Option<_>>()
                .ok_or_else(|| Error::invalid("agent names must be strings"))?,
            _ => return Err(Error::invalid("agents must be a count or a list of names")),
        };
        if agents.is_empty() {
            return Err(Error::invalid("a board needs at least one agent"));
        }
        let index: HashMap<&str, usize> = file
            .territories
            .iter()
            .enumerate()
            .map(|(i, t)| (t.id.as_str(), i))
            .collect();
        if index.len() != file.territories.len() {
            return Err(Error::invalid("territory ids must be unique"));
        }
        let mut adjacency = Vec::with_capacity(file.territories.len());
        let mut owner = Vec::new();
        let mut armies = Vec::new();
        for t in &file.territories {
            let mut adj = Vec::new();
            for a in &t.adjacent {
                let j = *index
                    .get(a.as_str())
                    .ok_or_else(|| Error::invalid(format!("territory {} lists unknown neighbour {a}", t.id)))?;
                if j == index[t.id.as_str()] {
                    return Err(Error::invalid(format!("territory {} is adjacent to itself", t.id)));
                }
                adj.push(j);
            }
            adj.sort_unstable();
            adj.dedup();
            adjacency.push(adj);
            let o = match &t.owner {
                Value::Null => None,
                Value::Number(n) => Some(n.as_u64().map(|n| n as usize).filter(|&n| n < agents.len()).ok_or_else(
                    || Error::invalid(format!("territory {} has an unknown owner {n}", t.id)),
                )?),
                Value::String(s) => Some(
                    agents
                        .iter()
                        .position(|a| a == s)
                        .ok_or_else(|| Error::invalid(format!("territory {} has an unknown owner {s}", t.id)))?,
                ),
                other => return Err(Error::invalid(format!("territory {}: bad owner {other}", t.id))),
            };
            if o.is_some() && t.armies == 0 {
                return Err(Error::invalid(format!("owned territory {} has no armies", t.id)));
            }
            owner.push(o);
            armies.push(t.armies);
        }
        for (i, adj) in adjacency.iter().enumerate() {
            for &j in adj {
                if !adjacency[j].contains(&i) {
                    return Err(Error::invalid(format!(
                        "adjacency must be symmetric: {} -> {}",
                        file.territories[i].id, file.territories[j].id
                    )));
                }
            }
        }
        if !connected(&adjacency) {
            return Err(Error::invalid("the territory graph must be connected"));
        }
        let weights = file.weights.unwrap_or_default();
        if !(weights.territory >= 0.0 && weights.army >= 0.0 && weights.territory + weights.army > 0.0) {
            return Err(Error::invalid("heuristic weights must be non-negative and not both zero"));
        }
        let gamma = file.gamma.unwrap_or(0.95);
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::invalid("gamma must lie in [0, 1]"));
        }
        let max_turns = file.max_turns.unwrap_or(10);
        if max_turns == 0 {
            return Err(Error::invalid("max_turns must be at least 1"));
        }
        let mut game = Self {
            names: Arc::new(file.territories.iter().map(|t| t.id.clone()).collect()),
            adjacency,
            agents,
            weights,
            max_turns,
            gamma,
            stochastic: file.stochastic,
            sequential: file.sequential,
            initial: SkirmishBoard {
                owner,
                armies,
                turn: 0,
                to_move: 0,
            },
        };
        game.initial.to_move = game.next_mover(&game.initial, None);
        Ok(game)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: BoardFile = serde_json::from_str(text).map_err(|e| Error::invalid(format!("board file: {e}")))?;
        Self::from_file(&file)
    }

    /// Ring of `agents * per_agent * 2` territories: each agent holds a run of
    /// `per_agent` territories with 3 armies, separated by neutral ones with 1.
    pub fn ring(agents: usize, per_agent: usize) -> Result<Self> {
        if agents == 0 || per_agent == 0 {
            return Err(Error::invalid("ring boards need at least one agent and territory"));
        }
        let n = agents * per_agent * 2;
        let territories = (0..n)
            .map(|i| {
                let block = i / per_agent;
                let owned = block % 2 == 0;
                TerritorySpec {
                    id: format!("T{i}"),
                    owner: if owned { Value::from(block / 2) } else { Value::Null },
                    armies: if owned { 3 } else { 1 },
                    adjacent: [(i + n - 1) % n, (i + 1) % n]
                        .iter()
                        .filter(|&&j| j != i)
                        .map(|j| format!("T{j}"))
                        .collect(),
                }
            })
            .collect();
        Self::from_file(&BoardFile {
            territories,
            agents: Value::from(agents),
            weights: None,
            max_turns: Some(6),
            gamma: None,
            stochastic: false,
            sequential: false,
        })
    }

    pub fn initial_board(&self) -> SkirmishBoard {
        self.initial.clone()
    }

    pub fn territory_names(&self) -> &[String] {
        &self.names
    }

    pub fn territory_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn adjacent(&self, t: usize) -> &[usize] {
        &self.adjacency[t]
    }

    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::invalid("gamma must lie in [0, 1]"));
        }
        self.gamma = gamma;
        Ok(self)
    }

    pub fn to_file(&self) -> BoardFile {
        BoardFile {
            territories: (0..self.names.len())
                .map(|t| TerritorySpec {
                    id: self.names[t].clone(),
                    owner: self.initial.owner[t].map_or(Value::Null, |o| Value::from(self.agents[o].clone())),
                    armies: self.initial.armies[t],
                    adjacent: self.adjacency[t].iter().map(|&j| self.names[j].clone()).collect(),
                })
                .collect(),
            agents: Value::from(self.agents.clone()),
            weights: Some(self.weights),
            max_turns: Some(self.max_turns),
            gamma: Some(self.gamma),
            stochastic: self.stochastic,
            sequential: self.sequential,
        }
    }

    pub fn action(&self, orders: Vec<(usize, Order)>) -> SkirmishAction {
        let mut orders = orders;
        orders.sort_by_key(|(t, _)| *t);
        SkirmishAction {
            orders,
            names: self.names.clone(),
        }
    }

    pub fn empty_action(&self) -> SkirmishAction {
        self.action(Vec::new())
    }

    /// Parses `T0:hold T1:attack(T2) ...` (the canonical encoding).
    pub fn parse_action(&self, text: &str) -> Result<SkirmishAction> {
        let text = text.trim();
        if text.is_empty() || text == "(no orders)" {
            return Ok(self.empty_action());
        }
        let bad = |msg: String| Error::invalid(format!("cannot parse orders `{text}`: {msg}"));
        let mut orders = Vec::new();
        for part in text.split_whitespace() {
            let (t, o) = part.split_once(':').ok_or_else(|| bad(format!("`{part}` is not territory:order")))?;
            let t = self.territory_index(t).ok_or_else(|| bad(format!("unknown territory {t}")))?;
            let arg = |o: &str, prefix: &str| -> Option<String> {
                o.strip_prefix(prefix)?.strip_suffix(')').map(str::to_string)
            };
            let order = if o == "hold" {
                Order::Hold
            } else if let Some(n) = arg(o, "reinforce(") {
                Order::Reinforce(n.trim_start_matches('+').parse().map_err(|_| bad(format!("bad count {n}")))?)
            } else if let Some(x) = arg(o, "attack(") {
                Order::Attack(self.territory_index(&x).ok_or_else(|| bad(format!("unknown territory {x}")))?)
            } else if let Some(x) = arg(o, "support(") {
                Order::Support(self.territory_index(&x).ok_or_else(|| bad(format!("unknown territory {x}")))?)
            } else {
                return Err(bad(format!("unknown order {o}")));
            };
            orders.push((t, order));
        }
        Ok(self.action(orders))
    }

    pub fn budget(&self, board: &SkirmishBoard, agent: usize) -> u32 {
        (board.territory_count(agent) as u32 / 3).max(1)
    }

    fn acts(&self, board: &SkirmishBoard, agent: usize) -> bool {
        !self.sequential || board.to_move == agent
    }

    /// Orders available to territory `t` (owned by `agent`), ignoring the
    /// shared reinforcement budget beyond its per-turn maximum.
    pub fn territory_orders(&self, board: &SkirmishBoard, agent: usize, t: usize) -> Vec<Order> {
        let budget = self.budget(board, agent);
        let mut out = vec![Order::Hold];
        out.extend((1..=budget).map(Order::Reinforce));
        if board.armies[t] >= 2 {
            out.extend(
                self.adjacency[t]
                    .iter()
                    .filter(|&&n| board.owner[n] != Some(agent))
                    .map(|&n| Order::Attack(n)),
            );
        }
        out.extend(self.adjacency[t].iter().map(|&n| Order::Support(n)));
        out
    }

    fn per_territory(&self, board: &SkirmishBoard, agent: usize) -> Vec<(usize, Vec<Order>)> {
        board
            .owned_by(agent)
            .map(|t| (t, self.territory_orders(board, agent, t)))
            .collect()
    }

    /// Size of the unconstrained order product (before the budget filter).
    pub fn order_product(&self, board: &SkirmishBoard, agent: usize) -> f64 {
        self.per_territory(board, agent)
            .iter()
            .map(|(_, o)| o.len() as f64)
            .product()
    }

    fn check(&self, board: &SkirmishBoard, agent: usize, action: &SkirmishAction) -> std::result::Result<(), String> {
        if self.is_terminal(board) {
            return Err("the game is over".into());
        }
        if !self.acts(board, agent) {
            return if action.is_empty() {
                Ok(())
            } else {
                Err(format!("it is {}'s move", self.agents[board.to_move]))
            };
        }
        let owned: Vec<usize> = board.owned_by(agent).collect();
        let given: Vec<usize> = action.orders.iter().map(|(t, _)| *t).collect();
        if given != owned {
            if let Some(t) = given.iter().find(|t| !owned.contains(t)) {
                return Err(format!("territory {} is not owned by agent {agent}", self.names[*t]));
            }
            if let Some(t) = owned.iter().find(|t| !given.contains(t)) {
                return Err(format!("territory {} has no order", self.names[*t]));
            }
            return Err("each owned territory needs exactly one order".into());
        }
        let budget = self.budget(board, agent);
        for (t, o) in &action.orders {
            let ok = match o {
                Order::Hold => true,
                Order::Reinforce(n) => *n >= 1 && *n <= budget,
                Order::Attack(n) => {
                    self.adjacency[*t].contains(n) && board.owner[*n] != Some(agent) && board.armies[*t] >= 2
                }
                Order::Support(n) => self.adjacency[*t].contains(n),
            };
            if !ok {
                return Err(format!("territory {}: illegal order {}", self.names[*t], action.order_text(o)));
            }
        }
        if action.reinforcements() > budget {
            return Err(format!("reinforcements exceed the budget of {budget}"));
        }
        Ok(())
    }

    fn enumerate(&self, board: &SkirmishBoard, agent: usize) -> Vec<SkirmishAction> {
        let per = self.per_territory(board, agent);
        let budget = self.budget(board, agent);
        let mut out = Vec::new();
        let mut current = Vec::with_capacity(per.len());
        fn rec(
            game: &SkirmishGame,
            per: &[(usize, Vec<Order>)],
            budget: u32,
            used: u32,
            current: &mut Vec<(usize, Order)>,
            out: &mut Vec<SkirmishAction>,
        ) {
            let Some(((t, orders), rest)) = per.split_first() else {
                out.push(game.action(current.clone()));
                return;
            };
            for o in orders {
                let cost = if let Order::Reinforce(n) = o { *n } else { 0 };
                if used + cost > budget {
                    continue;
                }
                current.push((*t, *o));
                rec(game, rest, budget, used + cost, current, out);
                current.pop();
            }
        }
        rec(self, &per, budget, 0, &mut current, &mut out);
        out
    }

    /// Resolves one turn of orders. `orders` may list agents in any order;
    /// agents that are absent issue no orders. `success` decides each
    /// contested capture given its success probability.
    pub fn adjudicate(
        &self,
        board: &SkirmishBoard,
        orders: &[(usize, &SkirmishAction)],
        mut success: impl FnMut(f64) -> bool,
    ) -> Result<SkirmishBoard> {
        let n = self.names.len();
        let mut order_of: Vec<Order> = vec![Order::Hold; n];
        let mut seen = vec![false; self.agents.len()];
        for (agent, action) in orders {
            if *agent >= self.agents.len() {
                return Err(Error::invalid(format!("unknown agent {agent}")));
            }
            if std::mem::replace(&mut seen[*agent], true) {
                return Err(Error::invalid(format!("agent {agent} listed twice")));
            }
            self.check(board, *agent, action).map_err(|detail| Error::IllegalAction { agent: *agent, detail })?;
            for (t, o) in &action.orders {
                order_of[*t] = *o;
            }
        }

        let mut armies = board.armies.clone();
        for t in 0..n {
            if let Order::Reinforce(k) = order_of[t] {
                armies[t] += k;
            }
        }
        let owner = &board.owner;
        let supports = |target: usize, by: Option<usize>| -> u32 {
            by.map_or(0, |by| {
                (0..n)
                    .filter(|&s| owner[s] == Some(by) && order_of[s] == Order::Support(target))
                    .count() as u32
            })
        };
        let attack_of = |t: usize| match order_of[t] {
            Order::Attack(x) => Some(x),
            _ => None,
        };
        // (source, target, strength)
        let mut attacks: Vec<(usize, usize, u32)> = (0..n)
            .filter_map(|s| attack_of(s).map(|t| (s, t, armies[s] + supports(t, owner[s]))))
            .collect();
        let strength_of = |attacks: &[(usize, usize, u32)], s: usize| attacks.iter().find(|a| a.0 == s).map(|a| a.2);
        let head_to_head_losers: Vec<usize> = attacks
            .iter()
            .filter(|(s, t, st)| {
                attack_of(*t) == Some(*s) && strength_of(&attacks, *t).is_some_and(|other| other >= *st)
            })
            .map(|a| a.0)
            .collect();
        attacks.retain(|a| !head_to_head_losers.contains(&a.0));

        let mut by_target: BTreeMap<usize, Vec<(usize, u32)>> = BTreeMap::new();
        for (s, t, st) in &attacks {
            by_target.entry(*t).or_default().push((*s, *st));
        }
        let mut captures = Vec::new();
        for (t, mut incoming) in by_target {
            incoming.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
            let (s, best) = incoming[0];
            let second = incoming.get(1).map_or(0, |a| a.1);
            if second == best {
                continue;
            }
            let defence = match owner[t] {
                None => armies[t],
                Some(_) if attack_of(t).is_some() => 1 + supports(t, owner[t]),
                Some(_) => armies[t] + supports(t, owner[t]),
            };
            let opposition = defence.max(second);
            let won = if self.stochastic {
                success(best as f64 / (best as f64 + opposition as f64))
            } else {
                best > opposition
            };
            if won {
                captures.push((s, t));
            }
        }

        let mut next = SkirmishBoard {
            owner: board.owner.clone(),
            armies: armies.clone(),
            turn: board.turn,
            to_move: board.to_move,
        };
        for &(s, _) in &captures {
            next.armies[s] = 1;
        }
        for &(s, t) in &captures {
            next.owner[t] = board.owner[s];
            next.armies[t] = armies[s] - 1;
        }
        Ok(next)
    }

    fn next_mover(&self, board: &SkirmishBoard, after: Option<usize>) -> usize {
        let p = self.agents.len();
        let start = after.map_or(0, |a| a + 1);
        (start..start + p)
            .map(|i| i % p)
            .find(|&a| board.territory_count(a) > 0)
            .unwrap_or(0)
    }

    fn advance(&self, board: &SkirmishBoard, mut next: SkirmishBoard) -> SkirmishBoard {
        if self.sequential {
            let mover = self.next_mover(&next, Some(board.to_move));
            if mover <= board.to_move {
                next.turn += 1;
            }
            next.to_move = mover;
        } else {
            next.turn += 1;
        }
        next
    }

    fn joint_orders<'a>(&self, joint: &'a [SkirmishAction]) -> Result<Vec<(usize, &'a SkirmishAction)>> {
        if joint.len() != self.agents.len() {
            return Err(Error::Dimension(format!(
                "joint action has {} entries for {} agents",
                joint.len(),
                self.agents.len()
            )));
        }
        Ok(joint.iter().enumerate().collect())
    }

    /// Per-agent heuristic: weighted territory and army shares.
    pub fn heuristic_value(&self, board: &SkirmishBoard) -> Vec<f64> {
        let p = self.agents.len();
        let mut territories = vec![0.0; p];
        let mut armies = vec![0.0; p];
        for (t, o) in board.owner.iter().enumerate() {
            if let Some(o) = o {
                territories[*o] += 1.0;
                armies[*o] += board.armies[t] as f64;
            }
        }
        let share = |v: &[f64]| -> Vec<f64> {
            let total: f64 = v.iter().sum();
            if total > 0.0 {
                v.iter().map(|x| x / total).collect()
            } else {
                vec![1.0 / p as f64; p]
            }
        };
        let (ts, as_) = (share(&territories), share(&armies));
        let w = self.weights.territory + self.weights.army;
        (0..p)
            .map(|i| (self.weights.territory * ts[i] + self.weights.army * as_[i]) / w)
            .collect()
    }
}

fn connected(adjacency: &[Vec<usize>]) -> bool {
    if adjacency.is_empty() {
        return false;
    }
    let mut seen = vec![false; adjacency.len()];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(i) = queue.pop_front() {
        for &j in &adjacency[i] {
            if !std::mem::replace(&mut seen[j], true) {
                queue.push_back(j);
            }
        }
    }
    seen.iter().all(|&s| s)
}

impl Environment for SkirmishGame {
    type State = SkirmishBoard;
    type Action = SkirmishAction;

    fn num_agents(&self) -> usize {
        self.agents.len()
    }

    fn discount(&self) -> f64 {
        self.gamma
    }

    fn is_terminal(&self, board: &SkirmishBoard) -> bool {
        board.turn >= self.max_turns
            || (0..self.agents.len()).filter(|&a| board.territory_count(a) > 0).count() <= 1
    }

    fn legal_actions(&self, board: &SkirmishBoard, agent: AgentId) -> ActionSet<SkirmishAction> {
        let a = agent.index();
        if self.is_terminal(board) {
            return ActionSet::Enumerated(Vec::new());
        }
        if !self.acts(board, a) || board.territory_count(a) == 0 {
            return ActionSet::Enumerated(vec![self.empty_action()]);
        }
        if self.order_product(board, a) <= ENUMERATION_LIMIT as f64 {
            ActionSet::Enumerated(self.enumerate(board, a))
        } else {
            ActionSet::Sampled
        }
    }

    fn is_legal(&self, board: &SkirmishBoard, agent: AgentId, action: &SkirmishAction) -> bool {
        agent.index() < self.agents.len() && self.check(board, agent.index(), action).is_ok()
    }

    /// Independent uniform order per territory, rejected until the shared
    /// reinforcement budget holds: uniform over the legal order sets.
    fn sample_legal(&self, board: &SkirmishBoard, agent: AgentId, rng: &mut SimRng) -> Option<SkirmishAction> {
        let a = agent.index();
        if self.is_terminal(board) {
            return None;
        }
        if !self.acts(board, a) {
            return Some(self.empty_action());
        }
        let per = self.per_territory(board, a);
        let budget = self.budget(board, a);
        for _ in 0..MAX_REJECTIONS {
            let orders: Vec<(usize, Order)> = per
                .iter()
                .map(|(t, opts)| (*t, opts[rng.gen_range(0..opts.len())]))
                .collect();
            let action = self.action(orders);
            if action.reinforcements() <= budget {
                return Some(action);
            }
        }
        None
    }

    fn step(&self, board: &SkirmishBoard, joint: &[SkirmishAction], rng: &mut SimRng) -> Result<SkirmishBoard> {
        let orders = self.joint_orders(joint)?;
        let next = self.adjudicate(board, &orders, |p| rng.gen::<f64>() < p)?;
        Ok(self.advance(board, next))
    }

    fn is_deterministic(&self) -> bool {
        !self.stochastic
    }

    fn most_probable_step(&self, board: &SkirmishBoard, joint: &[SkirmishAction]) -> Result<SkirmishBoard> {
        let orders = self.joint_orders(joint)?;
        let next = self.adjudicate(board, &orders, |p| p > 0.5)?;
        Ok(self.advance(board, next))
    }

    fn reward(&self, prev: &SkirmishBoard, next: &SkirmishBoard) -> Vec<f64> {
        if !self.is_terminal(prev) && self.is_terminal(next) {
            self.heuristic_value(next)
        } else {
            vec![0.0; self.agents.len()]
        }
    }

    fn strength(&self, board: &SkirmishBoard) -> Option<Vec<f64>> {
        Some((0..self.agents.len()).map(|a| board.territory_count(a) as f64).collect())
    }

    fn agent_names(&self) -> Vec<String> {
        self.agents.clone()
    }
}

/// Heuristic value on live boards, 0 once the game is over (the terminal
/// reward already paid it out).
#[derive(Debug, Clone, Copy, Default)]
pub struct HeuristicValue;

impl ValueFunction<SkirmishGame> for HeuristicValue {
    fn values(&self, env: &SkirmishGame, board: &SkirmishBoard) -> Result<Vec<f64>> {
        Ok(if env.is_terminal(board) {
            vec![0.0; env.num_agents()]
        } else {
            env.heuristic_value(board)
        })
    }
}

/// Per-territory stochastic policy that prefers attacks it would win.
/// `aggression` scales attack weights; 0 never attacks.
#[derive(Debug, Clone, Copy)]
pub struct HeuristicPolicy {
    pub aggression: f64,
}

impl HeuristicPolicy {
    fn weight(&self, game: &SkirmishGame, board: &SkirmishBoard, agent: usize, t: usize, o: &Order) -> f64 {
        let border = game.adjacency[t].iter().any(|&n| board.owner[n] != Some(agent));
        match o {
            Order::Hold => 1.0,
            Order::Reinforce(_) => {
                if border {
                    1.5
                } else {
                    0.25
                }
            }
            Order::Attack(n) => {
                let edge = board.armies[t] as f64 - board.armies[*n] as f64;
                self.aggression * (1.0 + edge).max(0.1)
            }
            Order::Support(n) => {
                if board.owner[*n] == Some(agent) {
                    0.3
                } else {
                    0.5
                }
            }
        }
    }
}

impl Policy<SkirmishGame> for HeuristicPolicy {
    fn sample(&self, env: &SkirmishGame, board: &SkirmishBoard, agent: AgentId, rng: &mut SimRng) -> Result<SkirmishAction> {
        let a = agent.index();
        if !env.acts(board, a) || board.territory_count(a) == 0 {
            return Ok(env.empty_action());
        }
        let per = env.per_territory(board, a);
        let budget = env.budget(board, a);
        for _ in 0..MAX_REJECTIONS {
            let mut orders = Vec::with_capacity(per.len());
            for (t, opts) in &per {
                let weights: Vec<f64> = opts.iter().map(|o| self.weight(env, board, a, *t, o)).collect();
                let total: f64 = weights.iter().sum();
                let mut u = rng.gen::<f64>() * total;
                let mut pick = opts.len() - 1;
                for (i, w) in weights.iter().enumerate() {
                    if u < *w {
                        pick = i;
                        break;
                    }
                    u -= w;
                }
                orders.push((*t, opts[pick]));
            }
            let action = env.action(orders);
            if action.reinforcements() <= budget {
                return Ok(action);
            }
        }
        Err(Error::Policy {
            agent: a,
            detail: "could not draw orders within the reinforcement budget".into(),
        })
    }
}

//! JSON-level access to the bundled games, shared by the CLI and the HTTP
//! service: build a game from `{game, config}`, view its state, list
//! candidate actions, run explanations and advance it.

use std::collections::HashMap;
use std::sync::Arc;

use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use interplay_core::counterfactual::{counterfactuals, sample_policy_actions, CounterfactualQuery};
use interplay_core::explain::{probable_actions, probable_trajectory, sbue, sica};
use interplay_core::rng::fingerprint;
use interplay_core::wire::{CounterfactualWire, ExplanationWire, QueryWire};
use interplay_core::{
    ActionSet, AgentId, Environment, Error, GameAction, Parallelism, PinnedActionSet, Policy, Result, SeededRng,
    Simulator, SimRng, TraceRecord, UniformPolicy, UtilityMatrix, ValueFunction, ZeroValue,
};

use crate::cop::llm::{LlmAdapter, LlmConfig, LlmPolicy};
use crate::cop::{
    letter, standard_policies, Announcement, CopAction, CopConfig, CopGame, CopMcValue, CopState, Message,
    Template, NUM_AGENTS,
};
use crate::matrix::{MatrixAction, MatrixGame, MatrixGameFile, MatrixState, MixedPolicy};
use crate::skirmish::{BoardFile, HeuristicPolicy, HeuristicValue, SkirmishAction, SkirmishBoard, SkirmishGame};

/// Default rollout count when a request does not give one.
pub const DEFAULT_K: usize = 1000;
/// Legal actions listed by [`Live::candidates`] before truncating.
const MAX_LISTED: usize = 500;

/// A game whose actions and states have JSON forms.
pub trait WireGame: Environment
where
    Self::Action: Serialize,
{
    const NAME: &'static str;

    /// Reads an action for `agent` from JSON, without checking legality.
    fn decode(&self, agent: AgentId, value: &Value) -> Result<Self::Action>;

    /// Game-specific state description.
    fn view(&self, state: &Self::State) -> Value;

    fn state_bytes(&self, state: &Self::State) -> Vec<u8>;
}

impl WireGame for MatrixGame {
    const NAME: &'static str = "matrix";

    fn decode(&self, agent: AgentId, value: &Value) -> Result<MatrixAction> {
        let i = match value {
            Value::Number(n) => n.as_u64().map(|n| n as usize),
            Value::String(s) => s.strip_prefix('a').unwrap_or(s).parse().ok(),
            _ => None,
        }
        .ok_or_else(|| Error::invalid(format!("cannot read a matrix action from {value}")))?;
        let n = self
            .actions_per_agent()
            .get(agent.index())
            .copied()
            .ok_or_else(|| Error::invalid(format!("unknown agent {agent}")))?;
        if i >= n {
            return Err(Error::IllegalAction {
                agent: agent.index(),
                detail: format!("action a{i} out of range (agent has {n})"),
            });
        }
        Ok(MatrixAction(i))
    }

    fn view(&self, state: &MatrixState) -> Value {
        json!({
            "actions_per_agent": self.actions_per_agent(),
            "played": state.played,
            "payoffs": state.played.as_ref().map(|j| self.payoff(j).to_vec()),
        })
    }

    fn state_bytes(&self, state: &MatrixState) -> Vec<u8> {
        serde_json::to_vec(state).unwrap_or_default()
    }
}

fn letter_index(s: &str) -> Option<usize> {
    ["a", "b", "c"].iter().position(|l| *l == s)
}

impl CopGame {
    /// Parses the canonical encoding (`a->b:accuse(c)`, `a->b:free:text`,
    /// `announce(b=guilty,c=innocent)`).
    pub fn parse_canonical(&self, agent: usize, text: &str) -> Result<CopAction> {
        let text = text.trim();
        for a in Announcement::all(agent) {
            if a.canonical() == text {
                return Ok(CopAction::Announce(a));
            }
        }
        let bad = || Error::invalid(format!("cannot read a prison-game action from `{text}`"));
        let (route, body) = text.split_once(':').ok_or_else(bad)?;
        let (from, to) = route.split_once("->").ok_or_else(bad)?;
        let (from, to) = (letter_index(from).ok_or_else(bad)?, letter_index(to).ok_or_else(bad)?);
        if from != agent {
            return Err(Error::IllegalAction {
                agent,
                detail: format!("message is sent by {} but agent is {}", letter(from), letter(agent)),
            });
        }
        if let Some(free) = body.strip_prefix("free:") {
            return Ok(CopAction::Message(Message::free_text(from, to, free)));
        }
        if from == to {
            return Err(Error::IllegalAction {
                agent,
                detail: "agents cannot message themselves".into(),
            });
        }
        Template::scripted(from, to)
            .into_iter()
            .find(|t| t.id() == body)
            .map(|t| CopAction::Message(Message::scripted(from, to, t)))
            .ok_or_else(bad)
    }
}

impl WireGame for CopGame {
    const NAME: &'static str = "cop";

    fn decode(&self, agent: AgentId, value: &Value) -> Result<CopAction> {
        let a = agent.index();
        if let Some(s) = value.as_str() {
            return self.parse_canonical(a, s);
        }
        let obj = value
            .as_object()
            .ok_or_else(|| Error::invalid(format!("cannot read a prison-game action from {value}")))?;
        let agent_field = |key: &str| -> Result<Option<usize>> {
            match obj.get(key) {
                None | Some(Value::Null) => Ok(None),
                Some(raw) => {
                    let idx = match raw {
                        Value::Number(n) => n.as_u64().map(|n| n as usize).filter(|&n| n < NUM_AGENTS),
                        Value::String(s) => letter_index(&s.to_ascii_lowercase()),
                        _ => None,
                    };
                    idx.map(Some).ok_or_else(|| Error::invalid(format!("`{key}`: unknown agent {raw}")))
                }
            }
        };
        match obj.get("kind").and_then(Value::as_str) {
            Some("announce") | Some("announcement") => {
                let verdict = |who: usize| -> Result<bool> {
                    let v = obj
                        .get(letter(who))
                        .or_else(|| obj.get("guilty").and_then(|g| g.get(who)))
                        .ok_or_else(|| Error::invalid(format!("announcement has no verdict on {}", letter(who))))?;
                    match v {
                        Value::Bool(b) => Ok(*b),
                        Value::Number(n) if n.as_u64() == Some(1) => Ok(true),
                        Value::Number(n) if n.as_u64() == Some(0) => Ok(false),
                        Value::String(s) if s == "guilty" => Ok(true),
                        Value::String(s) if s == "innocent" => Ok(false),
                        other => Err(Error::invalid(format!("bad verdict {other}"))),
                    }
                };
                let [x, y] = crate::cop::others(a);
                Ok(CopAction::Announce(Announcement::new(a, verdict(x)?, verdict(y)?)))
            }
            Some("message") => {
                if let Some(sender) = agent_field("sender")? {
                    if sender != a {
                        return Err(Error::IllegalAction {
                            agent: a,
                            detail: format!("message is sent by {} but agent is {}", letter(sender), letter(a)),
                        });
                    }
                }
                let recipient =
                    agent_field("recipient")?.ok_or_else(|| Error::invalid("message needs a recipient"))?;
                let template = obj.get("template").and_then(Value::as_str).unwrap_or("free_text");
                let text = obj.get("text").and_then(Value::as_str);
                if template == "free_text" {
                    let text = text.ok_or_else(|| Error::invalid("free-text message needs `text`"))?;
                    return Ok(CopAction::Message(Message::free_text(a, recipient, text)));
                }
                let target = agent_field("target")?;
                let id = match target {
                    Some(t) => format!("{template}({})", letter(t)),
                    None => template.to_string(),
                };
                if recipient == a {
                    return Err(Error::IllegalAction {
                        agent: a,
                        detail: "agents cannot message themselves".into(),
                    });
                }
                let t = Template::scripted(a, recipient)
                    .into_iter()
                    .find(|t| t.id() == id)
                    .ok_or_else(|| Error::IllegalAction {
                        agent: a,
                        detail: format!("template {id} is not available towards {}", letter(recipient)),
                    })?;
                let mut m = Message::scripted(a, recipient, t);
                if let Some(text) = text {
                    m.text = text.to_string();
                }
                Ok(CopAction::Message(m))
            }
            _ => Err(Error::invalid("action object needs `kind`: message or announce")),
        }
    }

    fn view(&self, state: &CopState) -> Value {
        let mut v = serde_json::to_value(state).unwrap_or(Value::Null);
        if let Some(obj) = v.as_object_mut() {
            obj.insert("rounds".into(), json!(self.config.rounds));
            obj.insert(
                "personalities".into(),
                json!(self.config.personalities.iter().map(|p| p.label()).collect::<Vec<_>>()),
            );
        }
        v
    }

    fn state_bytes(&self, state: &CopState) -> Vec<u8> {
        serde_json::to_vec(state).unwrap_or_default()
    }
}

impl WireGame for SkirmishGame {
    const NAME: &'static str = "skirmish";

    fn decode(&self, _agent: AgentId, value: &Value) -> Result<SkirmishAction> {
        match value {
            Value::String(s) => self.parse_action(s),
            Value::Array(items) => {
                let mut parts = Vec::new();
                for item in items {
                    let t = item.get("territory").or_else(|| item.get("unit")).and_then(Value::as_str);
                    let o = item.get("order").and_then(Value::as_str);
                    match (t, o) {
                        (Some(t), Some(o)) => parts.push(format!("{t}:{o}")),
                        _ => return Err(Error::invalid(format!("bad order entry {item}"))),
                    }
                }
                self.parse_action(&parts.join(" "))
            }
            other => Err(Error::invalid(format!("cannot read orders from {other}"))),
        }
    }

    fn view(&self, board: &SkirmishBoard) -> Value {
        let names = self.agent_names();
        let territories: Vec<Value> = self
            .territory_names()
            .iter()
            .enumerate()
            .map(|(t, id)| {
                json!({
                    "id": id,
                    "owner": board.owner[t].map(|o| names[o].clone()),
                    "armies": board.armies[t],
                    "adjacent": self.adjacent(t).iter().map(|&j| self.territory_names()[j].clone()).collect::<Vec<_>>(),
                })
            })
            .collect();
        json!({
            "turn": board.turn,
            "max_turns": self.max_turns,
            "to_move": if self.sequential { Some(board.to_move) } else { None },
            "territories": territories,
            "heuristic_value": self.heuristic_value(board),
        })
    }

    fn state_bytes(&self, state: &SkirmishBoard) -> Vec<u8> {
        serde_json::to_vec(state).unwrap_or_default()
    }
}

/// Server-side bounds on request sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_k: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self { max_k: 5000 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PinWire {
    pub agent: usize,
    pub action: Value,
    #[serde(default)]
    pub depth: usize,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplainParams {
    pub k: Option<usize>,
    pub d: Option<usize>,
    pub seed: Option<u64>,
    pub pins: Vec<PinWire>,
    /// Also report utilities z-standardized against unconstrained play.
    pub standardize: bool,
    pub baseline_k: Option<usize>,
    pub horizon: Option<usize>,
}

/// Result of one committed step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub joint: Vec<String>,
    pub rewards: Vec<f64>,
    pub terminal: bool,
}

/// A game instance with its current state, seat policies and value function.
pub struct Live<E: WireGame>
where
    E::Action: Serialize,
{
    pub env: E,
    pub state: E::State,
    pub policies: Vec<Arc<dyn Policy<E>>>,
    pub values: Arc<dyn ValueFunction<E>>,
    pub seed: u64,
    pub steps: usize,
    pub parallelism: Parallelism,
}

impl<E: WireGame> Live<E>
where
    E::Action: Serialize,
{
    pub fn simulator(&self) -> Result<Simulator<'_, E>> {
        Ok(Simulator::new(&self.env, &self.policies, self.values.as_ref())?.with_parallelism(self.parallelism))
    }

    pub fn agent(&self, agent: usize) -> Result<AgentId> {
        AgentId::checked(agent, self.env.num_agents())
    }

    pub fn is_terminal(&self) -> bool {
        self.env.is_terminal(&self.state)
    }

    pub fn view(&self) -> Value {
        let mut v = json!({
            "game": E::NAME,
            "agents": self.env.agent_names(),
            "terminal": self.is_terminal(),
            "step": self.steps,
        });
        v["state"] = self.env.view(&self.state);
        v
    }

    pub fn fingerprint(&self) -> u64 {
        fingerprint(&self.env.state_bytes(&self.state))
    }

    pub fn decode(&self, agent: usize, value: &Value) -> Result<E::Action> {
        let id = self.agent(agent)?;
        if let (Some(s), ActionSet::Enumerated(legal)) = (value.as_str(), self.env.legal_actions(&self.state, id)) {
            if let Some(a) = legal.into_iter().find(|a| a.canonical() == s) {
                return Ok(a);
            }
        }
        self.env.decode(id, value)
    }

    pub fn pins(&self, pins: &[PinWire]) -> Result<PinnedActionSet<E::Action>> {
        let mut set = PinnedActionSet::new();
        for p in pins {
            let agent = self.agent(p.agent)?;
            let action = if p.depth == 0 {
                self.decode(p.agent, &p.action)?
            } else {
                self.env.decode(agent, &p.action)?
            };
            set.insert(agent, action, p.depth)?;
        }
        Ok(set)
    }

    fn bounded(&self, k: Option<usize>, limits: Limits) -> Result<usize> {
        let k = k.unwrap_or(DEFAULT_K.min(limits.max_k));
        if k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        if k > limits.max_k {
            return Err(Error::invalid(format!("k = {k} exceeds the server cap of {}", limits.max_k)));
        }
        Ok(k)
    }

    /// Runs `sbue`, `sica`, `probable`, `trajectory` or `counterfactual`;
    /// returns the wire JSON. Never changes the state.
    pub fn explain(&self, kind: &str, params: &Value, limits: Limits) -> Result<Value> {
        let p: ExplainParams = serde_json::from_value(params.clone())
            .map_err(|e| Error::invalid(format!("explain params: {e}")))?;
        let seed = p.seed.unwrap_or(self.seed);
        let rng = SeededRng::new(seed);
        let sim = self.simulator()?;
        let names = self.env.agent_names();
        let k = self.bounded(p.k, limits)?;
        let pins = self.pins(&p.pins)?;
        let out = match kind {
            "sbue" => {
                let baseline = if p.standardize {
                    let kb = self.bounded(p.baseline_k.or(Some(k)), limits)?;
                    Some(sim.baseline_moments(&self.state, kb, 1, rng.derive(3))?)
                } else {
                    None
                };
                let e = sbue(&sim, &self.state, &pins, k, baseline.as_ref(), rng)?;
                serde_json::to_value(ExplanationWire::from_sbue(names, &e, seed))
            }
            "sica" => {
                let m = sica(&sim, &self.state, k, p.d.unwrap_or(1), rng)?;
                serde_json::to_value(ExplanationWire::from_sica(names, &m, seed))
            }
            "probable" => {
                let pa = probable_actions(&sim, &self.state, &pins, k, rng)?;
                serde_json::to_value(ExplanationWire::from_probable(names, &pa, pins.describe(), seed))
            }
            "trajectory" => {
                let t = probable_trajectory(&sim, &self.state, &pins, k, p.horizon.unwrap_or(1), rng)?;
                serde_json::to_value(ExplanationWire::from_trajectory(names, &t, k, pins.describe(), seed))
            }
            "counterfactual" => return self.counterfactual(params, seed, limits),
            other => {
                return Err(Error::invalid(format!(
                    "unknown explanation type `{other}` (sbue, sica, probable, trajectory, counterfactual)"
                )))
            }
        };
        out.map_err(|e| Error::invalid(format!("serializing explanation: {e}")))
    }

    fn counterfactual(&self, params: &Value, seed: u64, limits: Limits) -> Result<Value> {
        let q: QueryWire =
            serde_json::from_value(params.clone()).map_err(|e| Error::invalid(format!("counterfactual query: {e}")))?;
        let mut cp = q.params();
        cp.exact_utility = params.get("exact_utility").and_then(Value::as_bool).unwrap_or(false);
        cp.use_policy_prob = params.get("use_policy_prob").and_then(Value::as_bool).unwrap_or(false);
        if cp.samples > limits.max_k || cp.utility_samples > limits.max_k {
            return Err(Error::invalid(format!("sample counts exceed the server cap of {}", limits.max_k)));
        }
        let agent = self.agent(q.agent)?;
        let reference = self.decode(q.agent, &q.reference_action)?;
        let query = CounterfactualQuery::new(agent, reference.clone(), q.constraints.clone())?;
        let sim = self.simulator()?;
        let result = counterfactuals(&sim, &self.state, &query, &cp, SeededRng::new(seed))?;
        serde_json::to_value(CounterfactualWire::new(q.agent, &reference, &result, cp, seed))
            .map_err(|e| Error::invalid(format!("serializing counterfactuals: {e}")))
    }

    /// Legal actions (when enumerable) and the seat policy's sampled
    /// frequencies for `agent`.
    pub fn candidates(&self, agent: usize, samples: usize, seed: u64) -> Result<Value> {
        let id = self.agent(agent)?;
        if self.is_terminal() {
            return Ok(json!({"agent": agent, "enumerated": true, "legal": [], "sampled": []}));
        }
        let item = |a: &E::Action| json!({"action": a.canonical(), "detail": serde_json::to_value(a).unwrap_or(Value::Null)});
        let (enumerated, legal, truncated) = match self.env.legal_actions(&self.state, id) {
            ActionSet::Enumerated(list) => {
                let truncated = list.len() > MAX_LISTED;
                (true, list.iter().take(MAX_LISTED).map(item).collect::<Vec<_>>(), truncated)
            }
            ActionSet::Sampled => (false, Vec::new(), false),
        };
        let sim = self.simulator()?;
        let sample = sample_policy_actions(&sim, &self.state, id, samples.max(1), SeededRng::new(seed))?;
        let mut counts = sample.counts.clone();
        counts.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.canonical().cmp(&b.0.canonical())));
        let sampled: Vec<Value> = counts
            .iter()
            .take(MAX_LISTED)
            .map(|(a, c)| {
                let mut v = item(a);
                v["frequency"] = json!(*c as f64 / sample.total as f64);
                v
            })
            .collect();
        Ok(json!({
            "agent": agent,
            "enumerated": enumerated,
            "legal": legal,
            "legal_truncated": truncated,
            "sampled": sampled,
        }))
    }

    fn step_rng(&self) -> SimRng {
        SeededRng::new(self.seed).derive(self.steps as u64 + 1).stream(0)
    }

    /// Advances one step. `fixed` gives actions for some seats; the others
    /// draw from their policies.
    pub fn act(&mut self, fixed: &[(usize, Value)]) -> Result<StepRecord> {
        if self.is_terminal() {
            return Err(Error::IllegalAction {
                agent: fixed.first().map_or(0, |f| f.0),
                detail: "the game is over".into(),
            });
        }
        let p = self.env.num_agents();
        let mut chosen: HashMap<usize, E::Action> = HashMap::new();
        for (agent, value) in fixed {
            let action = self.decode(*agent, value)?;
            if !self.env.is_legal(&self.state, AgentId(*agent), &action) {
                return Err(Error::IllegalAction {
                    agent: *agent,
                    detail: format!("`{}` is not legal now", action.canonical()),
                });
            }
            chosen.insert(*agent, action);
        }
        let mut rng = self.step_rng();
        let mut joint = Vec::with_capacity(p);
        for i in 0..p {
            let a = match chosen.remove(&i) {
                Some(a) => a,
                None => self.policies[i].sample(&self.env, &self.state, AgentId(i), &mut rng)?,
            };
            joint.push(a);
        }
        let next = self.env.step(&self.state, &joint, &mut rng)?;
        let rewards = self.env.reward(&self.state, &next);
        self.state = next;
        self.steps += 1;
        Ok(StepRecord {
            step: self.steps,
            joint: joint.iter().map(GameAction::canonical).collect(),
            rewards,
            terminal: self.is_terminal(),
        })
    }

    pub fn simulate(
        &self,
        k: usize,
        d: usize,
        pins: &[PinWire],
        seed: u64,
        traced: bool,
    ) -> Result<(UtilityMatrix, Option<Vec<TraceRecord>>)> {
        let sim = self.simulator()?;
        let pins = self.pins(pins)?;
        if traced {
            let (x, t) = sim.simulate_traced(&self.state, k, d, &pins, SeededRng::new(seed))?;
            Ok((x, Some(t)))
        } else {
            Ok((sim.simulate(&self.state, k, d, &pins, SeededRng::new(seed))?, None))
        }
    }
}

/// `{game, config}` as accepted by [`AnyGame::create`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GameSpec {
    pub game: String,
    #[serde(default)]
    pub config: Value,
}

pub enum AnyGame {
    Matrix(Live<MatrixGame>),
    Cop(Live<CopGame>),
    Skirmish(Live<SkirmishGame>),
}

macro_rules! each {
    ($self:expr, $g:ident => $body:expr) => {
        match $self {
            AnyGame::Matrix($g) => $body,
            AnyGame::Cop($g) => $body,
            AnyGame::Skirmish($g) => $body,
        }
    };
}

fn config_err(game: &str, e: impl std::fmt::Display) -> Error {
    Error::invalid(format!("{game} config: {e}"))
}

impl AnyGame {
    /// Builds a game from its selector (`matrix`, `cop`, `skirmish`) and JSON config.
    ///
    /// * matrix: `{actions_per_agent, payoffs, gamma?}` or `{random: {actions_per_agent}}`,
    ///   plus optional `policies` (list of probability vectors, or `"random"`);
    /// * cop: prison-game config plus optional `llm_seats` (agent indices
    ///   played through the language-model endpoint from the environment);
    /// * skirmish: a board file, or `{ring: {agents, per_agent}}`, plus
    ///   optional `policy` `{kind: uniform|heuristic, aggression}`.
    pub fn create(game: &str, config: &Value, seed: u64) -> Result<Self> {
        let config = if config.is_null() { json!({}) } else { config.clone() };
        let parallelism = Parallelism::default();
        match game {
            "matrix" => {
                let mut rng = SimRng::seed_from_u64(seed);
                let env = if let Some(r) = config.get("random") {
                    let actions: Vec<usize> = serde_json::from_value(
                        r.get("actions_per_agent").cloned().unwrap_or(json!([2, 2])),
                    )
                    .map_err(|e| config_err(game, e))?;
                    MatrixGame::random(actions, &mut rng)?
                } else {
                    let file: MatrixGameFile =
                        serde_json::from_value(config.clone()).map_err(|e| config_err(game, e))?;
                    MatrixGame::from_file(&file)?
                };
                let sizes = env.actions_per_agent().to_vec();
                let policies: Vec<Arc<dyn Policy<MatrixGame>>> = match config.get("policies") {
                    None | Some(Value::Null) => {
                        sizes.iter().map(|&n| Arc::new(MixedPolicy::uniform(n)) as _).collect()
                    }
                    Some(Value::String(s)) if s == "random" => {
                        sizes.iter().map(|&n| Arc::new(MixedPolicy::random(n, &mut rng)) as _).collect()
                    }
                    Some(v) => {
                        let probs: Vec<Vec<f64>> =
                            serde_json::from_value(v.clone()).map_err(|e| config_err(game, e))?;
                        if probs.len() != sizes.len() {
                            return Err(Error::Dimension(format!(
                                "{} policies for {} agents",
                                probs.len(),
                                sizes.len()
                            )));
                        }
                        probs
                            .into_iter()
                            .map(|p| MixedPolicy::new(p).map(|p| Arc::new(p) as Arc<dyn Policy<MatrixGame>>))
                            .collect::<Result<_>>()?
                    }
                };
                Ok(AnyGame::Matrix(Live {
                    state: env.initial_state(),
                    env,
                    policies,
                    values: Arc::new(ZeroValue),
                    seed,
                    steps: 0,
                    parallelism,
                }))
            }
            "cop" => {
                let mut cfg: CopConfig = serde_json::from_value(config.clone()).map_err(|e| config_err(game, e))?;
                if config.get("seed").is_none() {
                    cfg.seed = seed;
                }
                let env = CopGame::new(cfg)?;
                let scripted = standard_policies(&env.config.personalities);
                let llm_seats: Vec<usize> = match config.get("llm_seats") {
                    None | Some(Value::Null) => Vec::new(),
                    Some(v) => serde_json::from_value(v.clone()).map_err(|e| config_err(game, e))?,
                };
                let mut policies = scripted.clone();
                if !llm_seats.is_empty() {
                    let adapter = Arc::new(LlmAdapter::from_config(LlmConfig::from_env()?));
                    for &s in &llm_seats {
                        if s >= NUM_AGENTS {
                            return Err(config_err(game, format!("llm seat {s} out of range")));
                        }
                        policies[s] = Arc::new(LlmPolicy {
                            adapter: adapter.clone(),
                            personality: env.config.personalities[s],
                        });
                    }
                }
                let values = Arc::new(CopMcValue {
                    policies: scripted,
                    rollouts: env.config.value_rollouts,
                    seed: env.config.seed,
                });
                Ok(AnyGame::Cop(Live {
                    state: env.initial_state(),
                    env,
                    policies,
                    values,
                    seed,
                    steps: 0,
                    parallelism,
                }))
            }
            "skirmish" => {
                let env = if let Some(r) = config.get("ring") {
                    let get = |k: &str, d: u64| r.get(k).and_then(Value::as_u64).unwrap_or(d) as usize;
                    let mut g = SkirmishGame::ring(get("agents", 2), get("per_agent", 2))?;
                    if let Some(t) = config.get("max_turns").and_then(Value::as_u64) {
                        g.max_turns = (t as usize).max(1);
                    }
                    if let Some(gamma) = config.get("gamma").and_then(Value::as_f64) {
                        g = g.with_gamma(gamma)?;
                    }
                    g
                } else {
                    let file: BoardFile = serde_json::from_value(config.clone()).map_err(|e| config_err(game, e))?;
                    SkirmishGame::from_file(&file)?
                };
                let policy: Arc<dyn Policy<SkirmishGame>> = match config.get("policy") {
                    None | Some(Value::Null) => Arc::new(UniformPolicy),
                    Some(v) => match v.get("kind").and_then(Value::as_str) {
                        Some("uniform") => Arc::new(UniformPolicy),
                        Some("heuristic") => Arc::new(HeuristicPolicy {
                            aggression: v.get("aggression").and_then(Value::as_f64).unwrap_or(1.0),
                        }),
                        _ => return Err(config_err(game, "policy.kind must be uniform or heuristic")),
                    },
                };
                let policies = vec![policy; env.num_agents()];
                Ok(AnyGame::Skirmish(Live {
                    state: env.initial_board(),
                    env,
                    policies,
                    values: Arc::new(HeuristicValue),
                    seed,
                    steps: 0,
                    parallelism,
                }))
            }
            other => Err(Error::invalid(format!("unknown game `{other}` (matrix, cop, skirmish)"))),
        }
    }

    pub fn name(&self) -> &'static str {
        each!(self, g => g.env_name())
    }

    pub fn set_parallelism(&mut self, parallelism: Parallelism) {
        each!(self, g => g.parallelism = parallelism)
    }

    pub fn num_agents(&self) -> usize {
        each!(self, g => g.env.num_agents())
    }

    pub fn agent_names(&self) -> Vec<String> {
        each!(self, g => g.env.agent_names())
    }

    pub fn view(&self) -> Value {
        each!(self, g => g.view())
    }

    pub fn fingerprint(&self) -> u64 {
        each!(self, g => g.fingerprint())
    }

    pub fn is_terminal(&self) -> bool {
        each!(self, g => g.is_terminal())
    }

    pub fn explain(&self, kind: &str, params: &Value, limits: Limits) -> Result<Value> {
        each!(self, g => g.explain(kind, params, limits))
    }

    pub fn candidates(&self, agent: usize, samples: usize, seed: u64) -> Result<Value> {
        each!(self, g => g.candidates(agent, samples, seed))
    }

    pub fn act(&mut self, fixed: &[(usize, Value)]) -> Result<StepRecord> {
        each!(self, g => g.act(fixed))
    }

    pub fn simulate(
        &self,
        k: usize,
        d: usize,
        pins: &[PinWire],
        seed: u64,
        traced: bool,
    ) -> Result<(UtilityMatrix, Option<Vec<TraceRecord>>)> {
        each!(self, g => g.simulate(k, d, pins, seed, traced))
    }

    /// Agents with their per-agent strength in the current state, when the
    /// game defines one.
    pub fn strength(&self) -> Option<Vec<f64>> {
        each!(self, g => g.env.strength(&g.state))
    }
}

impl<E: WireGame> Live<E>
where
    E::Action: Serialize,
{
    fn env_name(&self) -> &'static str {
        E::NAME
    }
}

impl MatrixGame {
    pub fn initial_state(&self) -> MatrixState {
        MatrixState::initial()
    }
}

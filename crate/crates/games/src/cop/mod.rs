//! Three-agent cheap-talk prison game.
//!
//! Each of `K` communication rounds, every agent sends one private message
//! to one of the other two; messages are appended in a per-round precedence
//! order derived from the game seed. After round `K` every agent announces,
//! for each of the other two, innocent or guilty, and the game ends with
//! prison terms (negative years) given by [`cop_payoffs`].
//!
//! The scripted path uses a finite message vocabulary ([`Template`]) so modal
//! messages can be counted; free text (from the LLM adapter) is carried in
//! [`Template::FreeText`].

pub mod llm;
pub mod log;
pub mod scripted;
pub mod value;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use interplay_core::rng::splitmix64;
use interplay_core::{ActionSet, AgentId, Environment, Error, GameAction, Result, SimRng, SubOrder};

pub use scripted::{standard_policies, PersonalityParams, PersonalityType, ScriptedPolicy};
pub use value::{cop_value_estimate, CopMcValue};

pub const NUM_AGENTS: usize = 3;
pub const DEFAULT_ROUNDS: usize = 4;
pub const LETTERS: [&str; NUM_AGENTS] = ["a", "b", "c"];

/// Years per counted blame.
const BLAME_YEARS: f64 = 10.0;
/// Term for everyone when all six announcements are innocent.
const ALL_INNOCENT_YEARS: f64 = 5.0;

pub fn letter(i: usize) -> &'static str {
    LETTERS[i]
}

fn third(a: usize, b: usize) -> usize {
    3 - a - b
}

/// `agent`'s announcement about the two others.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Announcement {
    pub by: usize,
    /// Indexed by agent; the announcer's own entry is always `false`.
    pub guilty: [bool; NUM_AGENTS],
}

impl Announcement {
    /// `first`/`second` are the verdicts on the two other agents in index order.
    pub fn new(by: usize, first: bool, second: bool) -> Self {
        let mut guilty = [false; NUM_AGENTS];
        let others = others(by);
        guilty[others[0]] = first;
        guilty[others[1]] = second;
        Self { by, guilty }
    }

    pub fn blames(&self, target: usize) -> bool {
        self.guilty[target]
    }

    /// The four announcements available to `by`, innocent-first.
    pub fn all(by: usize) -> [Announcement; 4] {
        [
            Self::new(by, false, false),
            Self::new(by, true, false),
            Self::new(by, false, true),
            Self::new(by, true, true),
        ]
    }

    fn valid(&self) -> bool {
        self.by < NUM_AGENTS && !self.guilty[self.by]
    }
}

pub fn others(agent: usize) -> [usize; 2] {
    match agent {
        0 => [1, 2],
        1 => [0, 2],
        _ => [0, 1],
    }
}

fn verdict(g: bool) -> &'static str {
    if g {
        "guilty"
    } else {
        "innocent"
    }
}

impl GameAction for Announcement {
    fn canonical(&self) -> String {
        let [x, y] = others(self.by);
        format!(
            "announce({}={},{}={})",
            letter(x),
            verdict(self.guilty[x]),
            letter(y),
            verdict(self.guilty[y])
        )
    }

    fn sub_orders(&self) -> Vec<SubOrder> {
        others(self.by)
            .iter()
            .map(|&o| SubOrder::new(letter(o), verdict(self.guilty[o])))
            .collect()
    }
}

/// Prison terms (as negative years) for one announcement per agent.
///
/// Each counted blame costs 10 years. A blame by X of Y is not counted when
/// Y and the third agent W both blame X, unless W also blames Y. If all six
/// verdicts are innocent, everyone gets 5 years.
pub fn cop_payoffs(a: &Announcement, b: &Announcement, c: &Announcement) -> [f64; NUM_AGENTS] {
    let ann = [a, b, c];
    let blames = |x: usize, y: usize| ann[x].guilty[y];
    if (0..NUM_AGENTS).all(|x| others(x).iter().all(|&y| !blames(x, y))) {
        return [-ALL_INNOCENT_YEARS; NUM_AGENTS];
    }
    let mut out = [0.0; NUM_AGENTS];
    for (y, slot) in out.iter_mut().enumerate() {
        for x in others(y) {
            if !blames(x, y) {
                continue;
            }
            let w = third(x, y);
            let cancelled = blames(y, x) && blames(w, x) && !blames(w, y);
            if !cancelled {
                *slot -= BLAME_YEARS;
            }
        }
    }
    out
}

/// Scripted message vocabulary. Targets are agent indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "template", rename_all = "snake_case")]
pub enum Template {
    Accuse { target: usize },
    DefendSelf,
    ProposeAlliance { target: usize },
    AffirmTrust { target: usize },
    SowDoubt { target: usize },
    Smalltalk,
    FreeText,
}

impl Template {
    pub fn id(&self) -> String {
        match self {
            Template::Accuse { target } => format!("accuse({})", letter(*target)),
            Template::DefendSelf => "defend_self".into(),
            Template::ProposeAlliance { target } => format!("propose_alliance({})", letter(*target)),
            Template::AffirmTrust { target } => format!("affirm_trust({})", letter(*target)),
            Template::SowDoubt { target } => format!("sow_doubt({})", letter(*target)),
            Template::Smalltalk => "smalltalk".into(),
            Template::FreeText => "free_text".into(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Template::Accuse { .. } => "accuse",
            Template::DefendSelf => "defend_self",
            Template::ProposeAlliance { .. } => "propose_alliance",
            Template::AffirmTrust { .. } => "affirm_trust",
            Template::SowDoubt { .. } => "sow_doubt",
            Template::Smalltalk => "smalltalk",
            Template::FreeText => "free_text",
        }
    }

    pub fn target(&self) -> Option<usize> {
        match self {
            Template::Accuse { target }
            | Template::ProposeAlliance { target }
            | Template::AffirmTrust { target }
            | Template::SowDoubt { target } => Some(*target),
            _ => None,
        }
    }

    /// The seven scripted templates `sender` can send to `recipient`.
    pub fn scripted(sender: usize, recipient: usize) -> [Template; 7] {
        let w = third(sender, recipient);
        [
            Template::Accuse { target: recipient },
            Template::Accuse { target: w },
            Template::DefendSelf,
            Template::ProposeAlliance { target: w },
            Template::AffirmTrust { target: recipient },
            Template::SowDoubt { target: w },
            Template::Smalltalk,
        ]
    }

    fn valid_for(&self, sender: usize, recipient: usize) -> bool {
        let w = third(sender, recipient);
        match self {
            Template::Accuse { target } => *target == recipient || *target == w,
            Template::ProposeAlliance { target } | Template::SowDoubt { target } => *target == w,
            Template::AffirmTrust { target } => *target == recipient,
            Template::DefendSelf | Template::Smalltalk | Template::FreeText => true,
        }
    }

    /// Fixed English rendering of a scripted template.
    pub fn render(&self, sender: usize, recipient: usize) -> String {
        let up = |i: usize| letter(i).to_uppercase();
        match self {
            Template::Accuse { target } if *target == recipient => {
                format!("{}, I know it was you. Don't expect me to cover for you.", up(recipient))
            }
            Template::Accuse { target } => {
                format!("{}, I'm telling you, {} is the one who did it.", up(recipient), up(*target))
            }
            Template::DefendSelf => {
                format!("{}, I had nothing to do with the robbery. I'm innocent.", up(recipient))
            }
            Template::ProposeAlliance { target } => format!(
                "{}, let's stick together: we both say {} did it and we walk.",
                up(recipient),
                up(*target)
            ),
            Template::AffirmTrust { .. } => format!("{}, I trust you. I'll say you're innocent.", up(recipient)),
            Template::SowDoubt { target } => {
                format!("{}, be careful with {}. I wouldn't believe a word they say.", up(recipient), up(*target))
            }
            Template::Smalltalk => format!("Hey {}, rough place to be, huh? How are you holding up?", up(recipient)),
            Template::FreeText => format!("({} to {})", up(sender), up(recipient)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Message {
    pub sender: usize,
    pub recipient: usize,
    #[serde(flatten)]
    pub template: Template,
    pub text: String,
}

impl Message {
    pub fn scripted(sender: usize, recipient: usize, template: Template) -> Self {
        let text = template.render(sender, recipient);
        Self {
            sender,
            recipient,
            template,
            text,
        }
    }

    pub fn free_text(sender: usize, recipient: usize, text: impl Into<String>) -> Self {
        Self {
            sender,
            recipient,
            template: Template::FreeText,
            text: text.into(),
        }
    }

    /// The 14 scripted messages available to `sender`.
    pub fn all_scripted(sender: usize) -> Vec<Message> {
        others(sender)
            .iter()
            .flat_map(|&r| Template::scripted(sender, r).map(|t| Message::scripted(sender, r, t)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CopAction {
    Message(Message),
    Announce(Announcement),
}

impl GameAction for CopAction {
    fn canonical(&self) -> String {
        match self {
            CopAction::Message(m) => match &m.template {
                Template::FreeText => format!("{}->{}:free:{}", letter(m.sender), letter(m.recipient), m.text),
                t => format!("{}->{}:{}", letter(m.sender), letter(m.recipient), t.id()),
            },
            CopAction::Announce(a) => a.canonical(),
        }
    }

    fn sub_orders(&self) -> Vec<SubOrder> {
        match self {
            CopAction::Message(m) => vec![
                SubOrder::new("recipient", letter(m.recipient)),
                SubOrder::new("template", m.template.kind()),
                SubOrder::new("target", m.template.target().map_or("-", letter)),
            ],
            CopAction::Announce(a) => a.sub_orders(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Communicate,
    Announce,
    Terminal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatEntry {
    pub round: usize,
    #[serde(flatten)]
    pub message: Message,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CopState {
    pub round: usize,
    /// Order in which this round's messages are appended.
    pub precedence: [usize; NUM_AGENTS],
    pub chat: Vec<ChatEntry>,
    pub phase: Phase,
    pub announcements: Option<[Announcement; NUM_AGENTS]>,
    pub payoffs: Option<[f64; NUM_AGENTS]>,
}

impl CopState {
    /// Messages `agent` has sent or received, oldest first.
    pub fn visible_to(&self, agent: usize) -> impl Iterator<Item = &ChatEntry> {
        self.chat
            .iter()
            .filter(move |e| e.message.sender == agent || e.message.recipient == agent)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CopConfig {
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_assignment")]
    pub personalities: [PersonalityType; NUM_AGENTS],
    /// Rollouts per Monte Carlo value estimate.
    #[serde(default = "default_value_rollouts")]
    pub value_rollouts: usize,
    /// Sampling temperature for LLM-backed seats.
    #[serde(default = "default_temperature")]
    pub temperature: f64,
}

fn default_rounds() -> usize {
    DEFAULT_ROUNDS
}

fn default_assignment() -> [PersonalityType; NUM_AGENTS] {
    PersonalityType::STANDARD
}

fn default_value_rollouts() -> usize {
    16
}

fn default_temperature() -> f64 {
    0.7
}

impl Default for CopConfig {
    fn default() -> Self {
        Self {
            rounds: DEFAULT_ROUNDS,
            seed: 0,
            personalities: PersonalityType::STANDARD,
            value_rollouts: default_value_rollouts(),
            temperature: default_temperature(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CopGame {
    pub config: CopConfig,
}

impl CopGame {
    pub fn new(config: CopConfig) -> Result<Self> {
        if config.rounds == 0 {
            return Err(Error::invalid("the prison game needs at least one message round"));
        }
        if config.value_rollouts == 0 {
            return Err(Error::invalid("value_rollouts must be at least 1"));
        }
        if !(config.temperature.is_finite() && config.temperature >= 0.0) {
            return Err(Error::invalid("temperature must be a non-negative number"));
        }
        Ok(Self { config })
    }

    /// Precedence order of `round`, a fixed function of the game seed.
    pub fn precedence(&self, round: usize) -> [usize; NUM_AGENTS] {
        let mut order = [0, 1, 2];
        let mut rng = SimRng::seed_from_u64(splitmix64(self.config.seed ^ splitmix64(round as u64 + 1)));
        order.shuffle(&mut rng);
        order
    }

    pub fn initial_state(&self) -> CopState {
        CopState {
            round: 0,
            precedence: self.precedence(0),
            chat: Vec::new(),
            phase: Phase::Communicate,
            announcements: None,
            payoffs: None,
        }
    }

    fn check_message(&self, agent: usize, m: &Message) -> std::result::Result<(), String> {
        if m.sender != agent {
            return Err(format!("message sender {} does not match agent {agent}", m.sender));
        }
        if m.recipient >= NUM_AGENTS || m.recipient == agent {
            return Err("messages are private and go to one of the other two agents".into());
        }
        if !m.template.valid_for(agent, m.recipient) {
            return Err(format!("template {} is not valid for this recipient", m.template.id()));
        }
        if m.text.trim().is_empty() {
            return Err("message text is empty".into());
        }
        Ok(())
    }

    fn check(&self, state: &CopState, agent: usize, action: &CopAction) -> std::result::Result<(), String> {
        match (state.phase, action) {
            (Phase::Communicate, CopAction::Message(m)) => self.check_message(agent, m),
            (Phase::Announce, CopAction::Announce(a)) if a.by == agent && a.valid() => Ok(()),
            (Phase::Announce, CopAction::Announce(_)) => Err("announcement must be made by the acting agent about the other two".into()),
            (Phase::Terminal, _) => Err("the game is over".into()),
            (phase, _) => Err(format!("action does not match the {phase:?} phase")),
        }
    }
}

impl Environment for CopGame {
    type State = CopState;
    type Action = CopAction;

    fn num_agents(&self) -> usize {
        NUM_AGENTS
    }

    fn discount(&self) -> f64 {
        1.0
    }

    fn is_terminal(&self, state: &CopState) -> bool {
        state.phase == Phase::Terminal
    }

    fn legal_actions(&self, state: &CopState, agent: AgentId) -> ActionSet<CopAction> {
        let i = agent.index();
        ActionSet::Enumerated(match state.phase {
            Phase::Communicate => Message::all_scripted(i).into_iter().map(CopAction::Message).collect(),
            Phase::Announce => Announcement::all(i).into_iter().map(CopAction::Announce).collect(),
            Phase::Terminal => Vec::new(),
        })
    }

    fn is_legal(&self, state: &CopState, agent: AgentId, action: &CopAction) -> bool {
        agent.index() < NUM_AGENTS && self.check(state, agent.index(), action).is_ok()
    }

    fn step(&self, state: &CopState, joint: &[CopAction], _rng: &mut SimRng) -> Result<CopState> {
        if joint.len() != NUM_AGENTS {
            return Err(Error::Dimension(format!("joint action has {} entries, expected 3", joint.len())));
        }
        for (i, a) in joint.iter().enumerate() {
            self.check(state, i, a)
                .map_err(|detail| Error::IllegalAction { agent: i, detail })?;
        }
        let mut next = state.clone();
        match state.phase {
            Phase::Communicate => {
                for &i in &state.precedence {
                    if let CopAction::Message(m) = &joint[i] {
                        next.chat.push(ChatEntry {
                            round: state.round,
                            message: m.clone(),
                        });
                    }
                }
                next.round += 1;
                next.precedence = self.precedence(next.round);
                if next.round >= self.config.rounds {
                    next.phase = Phase::Announce;
                }
            }
            Phase::Announce => {
                let ann: Vec<Announcement> = joint
                    .iter()
                    .map(|a| match a {
                        CopAction::Announce(x) => *x,
                        CopAction::Message(_) => unreachable!("checked above"),
                    })
                    .collect();
                next.payoffs = Some(cop_payoffs(&ann[0], &ann[1], &ann[2]));
                next.announcements = Some([ann[0], ann[1], ann[2]]);
                next.phase = Phase::Terminal;
            }
            Phase::Terminal => unreachable!("checked above"),
        }
        Ok(next)
    }

    fn reward(&self, prev: &CopState, next: &CopState) -> Vec<f64> {
        match (prev.phase, next.payoffs) {
            (Phase::Announce, Some(p)) => p.to_vec(),
            _ => vec![0.0; NUM_AGENTS],
        }
    }

    fn agent_names(&self) -> Vec<String> {
        (0..NUM_AGENTS)
            .map(|i| format!("{} ({})", letter(i).to_uppercase(), self.config.personalities[i].label()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use interplay_core::SeededRng;

    fn ann(by: usize, v: [u8; 2]) -> Announcement {
        Announcement::new(by, v[0] == 1, v[1] == 1)
    }

    #[test]
    fn documented_payoff_examples() {
        let all_innocent = cop_payoffs(&ann(0, [0, 0]), &ann(1, [0, 0]), &ann(2, [0, 0]));
        assert_eq!(all_innocent, [-5.0, -5.0, -5.0]);
        let a_b_vs_c = cop_payoffs(&ann(0, [0, 1]), &ann(1, [0, 1]), &ann(2, [0, 0]));
        assert_eq!(a_b_vs_c, [0.0, 0.0, -20.0]);
        let all_guilty = cop_payoffs(&ann(0, [1, 1]), &ann(1, [1, 1]), &ann(2, [1, 1]));
        assert_eq!(all_guilty, [-20.0, -20.0, -20.0]);
    }

    #[test]
    fn announcement_encoding() {
        let a = Announcement::new(1, true, false);
        assert_eq!(a.guilty, [true, false, false]);
        assert_eq!(a.canonical(), "announce(a=guilty,c=innocent)");
        assert_eq!(a.sub_orders(), vec![SubOrder::new("a", "guilty"), SubOrder::new("c", "innocent")]);
    }

    #[test]
    fn fourteen_scripted_messages_per_sender() {
        for s in 0..3 {
            let msgs = Message::all_scripted(s);
            assert_eq!(msgs.len(), 14);
            let mut ids: Vec<String> = msgs.iter().map(|m| CopAction::Message(m.clone()).canonical()).collect();
            ids.sort();
            ids.dedup();
            assert_eq!(ids.len(), 14);
        }
    }

    fn smalltalk_round(g: &CopGame, s: &CopState) -> CopState {
        let joint: Vec<CopAction> = (0..3)
            .map(|i| CopAction::Message(Message::scripted(i, (i + 1) % 3, Template::Smalltalk)))
            .collect();
        g.step(s, &joint, &mut SeededRng::new(0).stream(0)).unwrap()
    }

    #[test]
    fn protocol_rounds_and_announcement() {
        let g = CopGame::new(CopConfig::default()).unwrap();
        let mut s = g.initial_state();
        for r in 0..DEFAULT_ROUNDS {
            assert_eq!(s.phase, Phase::Communicate);
            let before = s.chat.len();
            let prec = s.precedence;
            s = smalltalk_round(&g, &s);
            assert_eq!(s.round, r + 1);
            assert_eq!(s.chat.len(), before + 3);
            let senders: Vec<usize> = s.chat[before..].iter().map(|e| e.message.sender).collect();
            assert_eq!(senders, prec.to_vec());
        }
        assert_eq!(s.phase, Phase::Announce);
        let joint: Vec<CopAction> = (0..3).map(|i| CopAction::Announce(Announcement::new(i, true, true))).collect();
        let end = g.step(&s, &joint, &mut SeededRng::new(0).stream(0)).unwrap();
        assert!(g.is_terminal(&end));
        assert_eq!(g.reward(&s, &end), vec![-20.0; 3]);
        assert_eq!(end.payoffs, Some([-20.0; 3]));
    }

    #[test]
    fn phase_mismatch_is_illegal() {
        let g = CopGame::new(CopConfig::default()).unwrap();
        let s = g.initial_state();
        let joint: Vec<CopAction> = (0..3).map(|i| CopAction::Announce(Announcement::new(i, true, true))).collect();
        assert!(matches!(
            g.step(&s, &joint, &mut SeededRng::new(0).stream(0)),
            Err(Error::IllegalAction { agent: 0, .. })
        ));
        let self_msg = CopAction::Message(Message::scripted(0, 0, Template::Smalltalk));
        assert!(!g.is_legal(&s, AgentId(0), &self_msg));
        let empty = CopAction::Message(Message::free_text(0, 1, "  "));
        assert!(!g.is_legal(&s, AgentId(0), &empty));
        let free = CopAction::Message(Message::free_text(0, 1, "hello"));
        assert!(g.is_legal(&s, AgentId(0), &free));
    }

    #[test]
    fn precedence_is_a_function_of_the_seed() {
        let g1 = CopGame::new(CopConfig { seed: 9, ..Default::default() }).unwrap();
        let g2 = CopGame::new(CopConfig { seed: 9, ..Default::default() }).unwrap();
        let orders: Vec<_> = (0..10).map(|r| g1.precedence(r)).collect();
        assert_eq!(orders, (0..10).map(|r| g2.precedence(r)).collect::<Vec<_>>());
        let distinct: std::collections::HashSet<_> = (0..40).map(|r| g1.precedence(r)).collect();
        assert!(distinct.len() > 1);
        assert!(CopGame::new(CopConfig { rounds: 0, ..Default::default() }).is_err());
    }
}

//! Scripted personality policies.
//!
//! Each agent keeps a suspicion score for the other two, built from the
//! messages it received (accusations raise it, trust and alliance offers lower
//! it). Messages are drawn from weights over the 14 scripted messages that
//! depend on those scores; announcements mix a fixed "blame both" / "blame
//! nobody" rate with a softmax over suspicion for blaming exactly one agent.
//!
//! Default announcement rates come from observed play of the three
//! personalities: the con-artist blamed both others in 31 of 40 games, the
//! politician and the simple person mostly blamed exactly one agent.

use rand::Rng;
use serde::{Deserialize, Serialize};

use interplay_core::{AgentId, Error, Policy, Result, SimRng};

use super::{others, third, Announcement, CopAction, CopGame, CopState, Message, Phase, Template, NUM_AGENTS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PersonalityType {
    ConArtist,
    SimplePerson,
    Politician,
}

impl PersonalityType {
    /// Agent A con-artist, B simple person, C politician.
    pub const STANDARD: [PersonalityType; NUM_AGENTS] =
        [PersonalityType::ConArtist, PersonalityType::SimplePerson, PersonalityType::Politician];
    /// The con-artist seat taken by a second politician.
    pub const TWO_POLITICIANS: [PersonalityType; NUM_AGENTS] =
        [PersonalityType::Politician, PersonalityType::SimplePerson, PersonalityType::Politician];

    pub fn label(&self) -> &'static str {
        match self {
            PersonalityType::ConArtist => "con_artist",
            PersonalityType::SimplePerson => "simple_person",
            PersonalityType::Politician => "politician",
        }
    }

    /// Personality text used in LLM prompts.
    pub fn description(&self) -> &'static str {
        match self {
            PersonalityType::Politician => "A political genius. Understands people fast, and asks the right questions. Do not trust people unless you feel a good vibe and validate the facts. You are selfish but also tend to be honest if it feels possible. However, if you dislike someone (for example, sneaky, manipulative people), you will deceive and convince with amazing charisma. You prefer to cooperate with people who are \"simple\" and nice - as you think they are more predictable, and truly dislike manipulation (unless you do it yourself, but you do it gently).",
            PersonalityType::SimplePerson => "Uses simple language, uneducated. You care about other people, a lot. You are somewhat easy to convince, but when someone lies to you or you suspect that someone is lying to you, you have a hard time forgetting it.",
            PersonalityType::ConArtist => "Sneaky, unreliable, manipulative, very selfish and unethical, yet convincing. Will not respect agreements if it serves your purpose. You generally do not care about other people and even want to harm them, to some extent.",
        }
    }

    pub fn default_params(&self) -> PersonalityParams {
        match self {
            PersonalityType::ConArtist => PersonalityParams {
                accusation_bias: 0.775,
                leniency: 0.0,
                trust_decay: 0.5,
                alliance_preference: 0.8,
                honesty_weight: 0.1,
                credulity: 0.1,
                sharpness: 1.0,
            },
            PersonalityType::SimplePerson => PersonalityParams {
                accusation_bias: 0.05,
                leniency: 0.0,
                trust_decay: 0.1,
                alliance_preference: 1.0,
                honesty_weight: 1.0,
                credulity: 0.9,
                sharpness: 4.0,
            },
            PersonalityType::Politician => PersonalityParams {
                accusation_bias: 0.0,
                leniency: 0.0,
                trust_decay: 0.2,
                alliance_preference: 0.8,
                honesty_weight: 0.7,
                credulity: 0.3,
                sharpness: 3.0,
            },
        }
    }
}

/// Behavior parameters; all in `[0, 1]` except `sharpness` (≥ 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PersonalityParams {
    /// Probability of announcing both others guilty.
    pub accusation_bias: f64,
    /// Probability of announcing both others innocent.
    pub leniency: f64,
    /// Fraction of earned trust lost per round (suspicion never fades).
    pub trust_decay: f64,
    /// Propensity to offer alliances and reassurance.
    pub alliance_preference: f64,
    /// 1 = messages follow own suspicion; 0 = manipulative mix regardless of it.
    pub honesty_weight: f64,
    /// How much third-party accusations shift own suspicion.
    pub credulity: f64,
    /// Softmax sharpness when picking the single agent to blame.
    pub sharpness: f64,
}

impl PersonalityParams {
    pub fn validate(&self) -> Result<()> {
        let unit = [
            ("accusation_bias", self.accusation_bias),
            ("leniency", self.leniency),
            ("trust_decay", self.trust_decay),
            ("alliance_preference", self.alliance_preference),
            ("honesty_weight", self.honesty_weight),
            ("credulity", self.credulity),
        ];
        for (name, v) in unit {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!("{name} = {v} outside [0, 1]")));
            }
        }
        if self.accusation_bias + self.leniency > 1.0 {
            return Err(Error::invalid("accusation_bias + leniency must not exceed 1"));
        }
        if !(self.sharpness.is_finite() && self.sharpness >= 0.0) {
            return Err(Error::invalid("sharpness must be a non-negative number"));
        }
        Ok(())
    }
}

/// Suspicion of `agent` toward every agent (own entry 0), from received messages.
pub fn suspicion(state: &CopState, agent: usize, params: &PersonalityParams) -> [f64; NUM_AGENTS] {
    let mut s = [0.0; NUM_AGENTS];
    let c = params.credulity;
    for e in state.visible_to(agent).filter(|e| e.message.recipient == agent) {
        let j = e.message.sender;
        let age = state.round.saturating_sub(e.round + 1) as i32;
        let keep = (1.0 - params.trust_decay).powi(age);
        let mut add = |who: usize, v: f64| {
            // earned trust fades, suspicion does not
            s[who] += if v < 0.0 { v * keep } else { v };
        };
        match e.message.template {
            Template::Accuse { target } if target == agent => add(j, 2.0),
            Template::Accuse { target } => {
                add(target, c);
                add(j, (1.0 - c) * 0.5);
            }
            Template::SowDoubt { target } => {
                add(target, 0.5 * c);
                add(j, (1.0 - c) * 0.75);
            }
            Template::ProposeAlliance { target } => {
                add(j, -1.0);
                add(target, 0.5 * c);
            }
            Template::AffirmTrust { .. } => add(j, -1.0),
            Template::DefendSelf => add(j, -0.25),
            Template::Smalltalk | Template::FreeText => {}
        }
    }
    s[agent] = 0.0;
    s
}

fn accusations_from(state: &CopState, agent: usize, from: usize) -> f64 {
    state
        .visible_to(agent)
        .filter(|e| e.message.sender == from && e.message.template == Template::Accuse { target: agent })
        .count() as f64
}

/// Unnormalized weights over the 14 scripted messages.
pub fn message_weights(state: &CopState, agent: usize, params: &PersonalityParams) -> Vec<(Message, f64)> {
    let s = suspicion(state, agent, params);
    let h = params.honesty_weight;
    let ap = params.alliance_preference;
    let pos = |v: f64| v.max(0.0);
    let mut out = Vec::with_capacity(14);
    for r in others(agent) {
        let w = third(agent, r);
        let accused = accusations_from(state, agent, r);
        for t in Template::scripted(agent, r) {
            let weight = match t {
                Template::Accuse { target } if target == r => h * 2.0 * pos(s[r]) + (1.0 - h) * 0.4,
                Template::Accuse { .. } => h * pos(s[w]) + (1.0 - h) * 0.8,
                Template::SowDoubt { .. } => h * 0.5 * pos(s[w]) + (1.0 - h) * 0.8,
                Template::ProposeAlliance { .. } => ap * pos(0.5 + pos(s[w]) - 0.5 * pos(s[r])),
                Template::AffirmTrust { .. } => h * ap * 2.0 * pos(-s[r]) + (1.0 - h) * 0.5,
                Template::DefendSelf => 2.0 * accused + (1.0 - h) * 0.1,
                Template::Smalltalk => 0.1 + 0.2 * h,
                Template::FreeText => 0.0,
            };
            out.push((Message::scripted(agent, r, t), weight));
        }
    }
    out
}

/// Exact distribution over the four announcements of `agent`.
pub fn announcement_distribution(state: &CopState, agent: usize, params: &PersonalityParams) -> [(Announcement, f64); 4] {
    let s = suspicion(state, agent, params);
    let [x, y] = others(agent);
    let one = 1.0 - params.accusation_bias - params.leniency;
    // softmax over the two candidates, written to stay finite for large scores
    let d = params.sharpness * (s[x] - s[y]);
    let px = 1.0 / (1.0 + (-d).exp());
    [
        (Announcement::new(agent, false, false), params.leniency),
        (Announcement::new(agent, true, false), one * px),
        (Announcement::new(agent, false, true), one * (1.0 - px)),
        (Announcement::new(agent, true, true), params.accusation_bias),
    ]
}

fn draw<T: Clone>(items: &[(T, f64)], rng: &mut SimRng) -> Option<T> {
    let total: f64 = items.iter().map(|(_, w)| w).sum();
    if !(total > 0.0) {
        return None;
    }
    let u = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for (item, w) in items {
        acc += w;
        if u < acc {
            return Some(item.clone());
        }
    }
    items.iter().rev().find(|(_, w)| *w > 0.0).map(|(t, _)| t.clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScriptedPolicy {
    pub personality: PersonalityType,
    pub params: PersonalityParams,
}

impl ScriptedPolicy {
    pub fn new(personality: PersonalityType) -> Self {
        Self {
            personality,
            params: personality.default_params(),
        }
    }

    pub fn with_params(personality: PersonalityType, params: PersonalityParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { personality, params })
    }

    fn distribution(&self, state: &CopState, agent: usize) -> Result<Vec<(CopAction, f64)>> {
        let items: Vec<(CopAction, f64)> = match state.phase {
            Phase::Communicate => message_weights(state, agent, &self.params)
                .into_iter()
                .map(|(m, w)| (CopAction::Message(m), w))
                .collect(),
            Phase::Announce => announcement_distribution(state, agent, &self.params)
                .into_iter()
                .map(|(a, w)| (CopAction::Announce(a), w))
                .collect(),
            Phase::Terminal => {
                return Err(Error::Policy {
                    agent,
                    detail: "no action in a finished game".into(),
                })
            }
        };
        Ok(items)
    }
}

impl Policy<CopGame> for ScriptedPolicy {
    fn sample(&self, _env: &CopGame, state: &CopState, agent: AgentId, rng: &mut SimRng) -> Result<CopAction> {
        let items = self.distribution(state, agent.index())?;
        draw(&items, rng).ok_or_else(|| Error::Policy {
            agent: agent.index(),
            detail: "all scripted weights are zero".into(),
        })
    }

    fn prob(&self, _env: &CopGame, state: &CopState, agent: AgentId, action: &CopAction) -> Option<f64> {
        let items = self.distribution(state, agent.index()).ok()?;
        let total: f64 = items.iter().map(|(_, w)| w).sum();
        Some(items.iter().filter(|(a, _)| a == action).map(|(_, w)| w / total).sum())
    }
}

pub fn standard_policies(
    personalities: &[PersonalityType; NUM_AGENTS],
) -> Vec<std::sync::Arc<dyn Policy<CopGame>>> {
    personalities
        .iter()
        .map(|p| std::sync::Arc::new(ScriptedPolicy::new(*p)) as std::sync::Arc<dyn Policy<CopGame>>)
        .collect()
}

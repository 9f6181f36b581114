//! Optional language-model seats for the prison game.
//!
//! The adapter renders a text prompt (setup, meta-context with agent id, task,
//! personality, chat history and stage), sends it to a chat-completion
//! endpoint and parses the reply into a [`Message`] or [`Announcement`].
//! Unparseable replies are retried a bounded number of times; after that the
//! error carries the whole transcript. Nothing is ever substituted silently.

use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use serde_json::{json, Value};

use interplay_core::{AgentId, Error, Policy, Result, SimRng};

use super::{letter, others, Announcement, CopAction, CopGame, CopState, Message, Phase, PersonalityType};

pub const PROMPT_TEMPLATE: &str = include_str!("../../assets/cop_prompt.txt");
pub const STAGE_COMMUNICATE: &str = include_str!("../../assets/cop_stage_communicate.txt");
pub const STAGE_ANNOUNCE: &str = include_str!("../../assets/cop_stage_announce.txt");

/// Attempts per decision before giving up.
pub const MAX_ATTEMPTS: usize = 3;

fn upper(i: usize) -> String {
    letter(i).to_uppercase()
}

/// Renders the prompt `agent` sees in `state`.
pub fn render_prompt(game: &CopGame, state: &CopState, agent: usize, personality: PersonalityType) -> String {
    let [x, y] = others(agent);
    let stage = match state.phase {
        Phase::Announce | Phase::Terminal => STAGE_ANNOUNCE
            .replace("{first}", letter(x))
            .replace("{second}", letter(y)),
        Phase::Communicate => STAGE_COMMUNICATE
            .replace("{round}", &(state.round + 1).to_string())
            .replace("{rounds}", &game.config.rounds.to_string())
            .replace("{others_or}", &format!("{} or {}", letter(x), letter(y))),
    };
    let history: Vec<String> = state
        .visible_to(agent)
        .map(|e| format!("{} to {}: {}", upper(e.message.sender), upper(e.message.recipient), e.message.text))
        .collect();
    let history = if history.is_empty() {
        "null".to_string()
    } else {
        history.join("\n")
    };
    PROMPT_TEMPLATE
        .replace("{stage}", stage.trim_end())
        .replace("{agent}", letter(agent))
        .replace("{others_slash}", &format!("{}/{}", letter(x), letter(y)))
        .replace("{personality}", personality.description())
        .replace("{history}", &format!("Chat history:\n{history}"))
}

fn letter_index(s: &str) -> Option<usize> {
    let s = s.trim().trim_matches(|c: char| !c.is_ascii_alphanumeric()).to_ascii_lowercase();
    let s = s.strip_prefix("agent").map(str::trim).unwrap_or(&s);
    match s {
        "a" => Some(0),
        "b" => Some(1),
        "c" => Some(2),
        _ => None,
    }
}

/// Parses a `TO: <x>` / `MESSAGE: <text>` reply.
pub fn parse_message(reply: &str, agent: usize) -> std::result::Result<Message, String> {
    let mut recipient = None;
    let mut text: Option<String> = None;
    for line in reply.lines() {
        let trimmed = line.trim();
        let lower = trimmed.to_ascii_lowercase();
        if let Some(rest) = lower.strip_prefix("to:") {
            recipient = letter_index(rest);
            if recipient.is_none() {
                return Err(format!("unknown recipient `{}`", rest.trim()));
            }
        } else if lower.starts_with("message:") {
            text = Some(trimmed["message:".len()..].trim().to_string());
        } else if let Some(t) = text.as_mut() {
            if !trimmed.is_empty() {
                t.push('\n');
                t.push_str(trimmed);
            }
        }
    }
    let recipient = recipient.ok_or("reply has no `TO:` line")?;
    if recipient == agent {
        return Err("agents cannot message themselves".into());
    }
    let text = text.filter(|t| !t.is_empty()).ok_or("reply has no `MESSAGE:` text")?;
    Ok(Message::free_text(agent, recipient, text))
}

/// Parses `(b=guilty, c=innocent)`-style verdicts on both other agents.
pub fn parse_announcement(reply: &str, agent: usize) -> std::result::Result<Announcement, String> {
    let compact: String = reply
        .to_ascii_lowercase()
        .chars()
        .filter(|c| !c.is_whitespace())
        .collect();
    let [x, y] = others(agent);
    let verdict = |who: usize| -> std::result::Result<bool, String> {
        let guilty = compact.contains(&format!("{}=guilty", letter(who)));
        let innocent = compact.contains(&format!("{}=innocent", letter(who)));
        match (guilty, innocent) {
            (true, false) => Ok(true),
            (false, true) => Ok(false),
            (true, true) => Err(format!("conflicting verdicts on {}", letter(who))),
            (false, false) => Err(format!("no verdict on {}", letter(who))),
        }
    };
    Ok(Announcement::new(agent, verdict(x)?, verdict(y)?))
}

/// A text-completion backend.
pub trait CompletionClient: Send + Sync {
    fn complete(&self, prompt: &str, temperature: f64) -> std::result::Result<String, String>;
}

/// Endpoint settings, usually read from the environment.
#[derive(Debug, Clone, PartialEq)]
pub struct LlmConfig {
    /// Chat-completions URL (OpenAI-compatible request/response shape).
    pub url: String,
    pub model: String,
    pub api_key: Option<String>,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout: Duration,
    /// Concurrent requests allowed against the endpoint.
    pub parallelism: usize,
}

impl LlmConfig {
    /// Reads `INTERPLAY_LLM_URL` (required), `INTERPLAY_LLM_MODEL`,
    /// `INTERPLAY_LLM_API_KEY`, `INTERPLAY_LLM_TEMPERATURE`,
    /// `INTERPLAY_LLM_MAX_TOKENS`, `INTERPLAY_LLM_TIMEOUT_SECS` and
    /// `INTERPLAY_LLM_PARALLELISM`.
    pub fn from_env() -> Result<Self> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self> {
        let url = get("INTERPLAY_LLM_URL").ok_or_else(|| Error::invalid("INTERPLAY_LLM_URL is not set"))?;
        fn num<T: std::str::FromStr>(get: &dyn Fn(&str) -> Option<String>, key: &str, default: T) -> Result<T> {
            match get(key) {
                None => Ok(default),
                Some(v) => v.trim().parse().map_err(|_| Error::invalid(format!("{key}: cannot parse `{v}`"))),
            }
        }
        let cfg = Self {
            url,
            model: get("INTERPLAY_LLM_MODEL").unwrap_or_else(|| "gpt-4".into()),
            api_key: get("INTERPLAY_LLM_API_KEY"),
            temperature: num(&get, "INTERPLAY_LLM_TEMPERATURE", 0.7)?,
            max_tokens: num(&get, "INTERPLAY_LLM_MAX_TOKENS", 256)?,
            timeout: Duration::from_secs(num(&get, "INTERPLAY_LLM_TIMEOUT_SECS", 60)?),
            parallelism: num(&get, "INTERPLAY_LLM_PARALLELISM", 1)?,
        };
        if cfg.parallelism == 0 {
            return Err(Error::invalid("INTERPLAY_LLM_PARALLELISM must be at least 1"));
        }
        Ok(cfg)
    }
}

/// Blocking HTTP client for chat-completion endpoints.
pub struct HttpCompletionClient {
    config: LlmConfig,
    agent: ureq::Agent,
}

impl HttpCompletionClient {
    pub fn new(config: LlmConfig) -> Self {
        let agent = ureq::AgentBuilder::new().timeout(config.timeout).build();
        Self { config, agent }
    }
}

impl CompletionClient for HttpCompletionClient {
    fn complete(&self, prompt: &str, temperature: f64) -> std::result::Result<String, String> {
        let body = json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": temperature,
            "max_tokens": self.config.max_tokens,
        });
        let mut req = self.agent.post(&self.config.url);
        if let Some(key) = &self.config.api_key {
            req = req.set("Authorization", &format!("Bearer {key}"));
        }
        let resp: Value = req
            .send_json(body)
            .map_err(|e| format!("request failed: {e}"))?
            .into_json()
            .map_err(|e| format!("response is not JSON: {e}"))?;
        resp.pointer("/choices/0/message/content")
            .or_else(|| resp.pointer("/choices/0/text"))
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| format!("response has no completion text: {resp}"))
    }
}

/// Counting semaphore bounding in-flight requests.
struct Limiter {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Limiter {
    fn new(n: usize) -> Self {
        Self {
            free: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn run<T>(&self, f: impl FnOnce() -> T) -> T {
        {
            let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
            while *free == 0 {
                free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
            }
            *free -= 1;
        }
        let out = f();
        *self.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.cv.notify_one();
        out
    }
}

pub struct LlmAdapter {
    client: Arc<dyn CompletionClient>,
    limiter: Limiter,
    pub max_attempts: usize,
}

impl LlmAdapter {
    pub fn new(client: Arc<dyn CompletionClient>, parallelism: usize) -> Self {
        Self {
            client,
            limiter: Limiter::new(parallelism),
            max_attempts: MAX_ATTEMPTS,
        }
    }

    pub fn from_config(config: LlmConfig) -> Self {
        let parallelism = config.parallelism;
        Self::new(Arc::new(HttpCompletionClient::new(config)), parallelism)
    }

    /// Asks the model for `agent`'s next action.
    pub fn decide(
        &self,
        game: &CopGame,
        state: &CopState,
        agent: usize,
        personality: PersonalityType,
        temperature: f64,
    ) -> Result<CopAction> {
        if state.phase == Phase::Terminal {
            return Err(Error::Policy {
                agent,
                detail: "no action in a finished game".into(),
            });
        }
        let prompt = render_prompt(game, state, agent, personality);
        let mut transcript = Vec::new();
        for attempt in 1..=self.max_attempts {
            let reply = self.limiter.run(|| self.client.complete(&prompt, temperature));
            let reply = match reply {
                Ok(r) => r,
                Err(e) => {
                    transcript.push(format!("attempt {attempt}: transport error: {e}"));
                    continue;
                }
            };
            let parsed = match state.phase {
                Phase::Communicate => parse_message(&reply, agent).map(CopAction::Message),
                _ => parse_announcement(&reply, agent).map(CopAction::Announce),
            };
            match parsed {
                Ok(action) => return Ok(action),
                Err(e) => transcript.push(format!("attempt {attempt}: {e}; reply: {reply:?}")),
            }
        }
        Err(Error::External {
            agent,
            detail: format!("no usable reply after {} attempts\n{}", self.max_attempts, transcript.join("\n")),
        })
    }
}

/// A seat played by a language model. Samples at the game temperature; the
/// mode is the temperature-0 reply, which may not represent the sampled
/// distribution.
pub struct LlmPolicy {
    pub adapter: Arc<LlmAdapter>,
    pub personality: PersonalityType,
}

impl Policy<CopGame> for LlmPolicy {
    fn sample(&self, env: &CopGame, state: &CopState, agent: AgentId, _rng: &mut SimRng) -> Result<CopAction> {
        self.adapter
            .decide(env, state, agent.index(), self.personality, env.config.temperature)
    }

    fn mode(&self, env: &CopGame, state: &CopState, agent: AgentId) -> Result<Option<CopAction>> {
        self.adapter.decide(env, state, agent.index(), self.personality, 0.0).map(Some)
    }

    fn greedy_decode(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cop::CopConfig;
    use interplay_core::Environment;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct Scripted {
        replies: Vec<&'static str>,
        calls: AtomicUsize,
    }

    impl CompletionClient for Scripted {
        fn complete(&self, _prompt: &str, _t: f64) -> std::result::Result<String, String> {
            let i = self.calls.fetch_add(1, Ordering::SeqCst);
            Ok(self.replies[i.min(self.replies.len() - 1)].to_string())
        }
    }

    fn adapter(replies: Vec<&'static str>) -> (Arc<Scripted>, LlmAdapter) {
        let client = Arc::new(Scripted {
            replies,
            calls: AtomicUsize::new(0),
        });
        (client.clone(), LlmAdapter::new(client, 1))
    }

    fn announce_state(game: &CopGame) -> CopState {
        let mut s = game.initial_state();
        s.phase = Phase::Announce;
        s.round = game.config.rounds;
        s
    }

    #[test]
    fn parses_announcement() {
        let a = parse_announcement("(b=guilty, c=innocent)", 0).unwrap();
        assert_eq!(a, Announcement::new(0, true, false));
        let a = parse_announcement("My call: (a = Innocent, c = GUILTY)", 1).unwrap();
        assert_eq!(a, Announcement::new(1, false, true));
        assert!(parse_announcement("(b=guilty)", 0).is_err());
        assert!(parse_announcement("b=guilty b=innocent c=guilty", 0).is_err());
    }

    #[test]
    fn parses_message() {
        let m = parse_message("TO: c\nMESSAGE: Hey C, we should talk.\nSeriously.", 0).unwrap();
        assert_eq!(m.recipient, 2);
        assert_eq!(m.text, "Hey C, we should talk.\nSeriously.");
        assert!(parse_message("TO: a\nMESSAGE: hi", 0).is_err());
        assert!(parse_message("hello there", 0).is_err());
    }

    #[test]
    fn prompt_carries_personality_and_stage() {
        let game = CopGame::new(CopConfig::default()).unwrap();
        let p = render_prompt(&game, &game.initial_state(), 0, PersonalityType::ConArtist);
        assert!(p.contains("Sneaky, unreliable, manipulative"));
        assert!(p.contains("You are agent a"));
        assert!(p.contains("TO: <b or c>"));
        assert!(p.contains("null"));
        let p = render_prompt(&game, &announce_state(&game), 1, PersonalityType::Politician);
        assert!(p.contains("(a=guilty or innocent, c=guilty or innocent)"));
        assert!(p.contains("A political genius"));
    }

    #[test]
    fn retries_then_succeeds() {
        let game = CopGame::new(CopConfig::default()).unwrap();
        let (client, adapter) = adapter(vec!["no idea", "(b=guilty, c=innocent)"]);
        let a = adapter
            .decide(&game, &announce_state(&game), 0, PersonalityType::ConArtist, 0.7)
            .unwrap();
        assert_eq!(a, CopAction::Announce(Announcement::new(0, true, false)));
        assert_eq!(client.calls.load(Ordering::SeqCst), 2);
    }

    #[test]
    fn malformed_thrice_is_an_error_with_transcript() {
        let game = CopGame::new(CopConfig::default()).unwrap();
        let (client, adapter) = adapter(vec!["nope", "still nope", "nah"]);
        let err = adapter
            .decide(&game, &announce_state(&game), 0, PersonalityType::ConArtist, 0.7)
            .unwrap_err();
        assert_eq!(client.calls.load(Ordering::SeqCst), 3);
        match err {
            Error::External { agent, detail } => {
                assert_eq!(agent, 0);
                assert!(detail.contains("\"nope\"") && detail.contains("\"still nope\"") && detail.contains("\"nah\""));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn policy_is_greedy_decode() {
        let game = CopGame::new(CopConfig::default()).unwrap();
        let (_, adapter) = adapter(vec!["TO: b\nMESSAGE: trust me"]);
        let policy = LlmPolicy {
            adapter: Arc::new(adapter),
            personality: PersonalityType::ConArtist,
        };
        assert!(Policy::<CopGame>::greedy_decode(&policy));
        let s = game.initial_state();
        let m = policy.mode(&game, &s, AgentId(0)).unwrap().unwrap();
        assert!(game.is_legal(&s, AgentId(0), &m));
    }

    #[test]
    fn config_from_lookup() {
        let cfg = LlmConfig::from_lookup(|k| match k {
            "INTERPLAY_LLM_URL" => Some("http://localhost:1/v1/chat/completions".into()),
            "INTERPLAY_LLM_MAX_TOKENS" => Some("64".into()),
            _ => None,
        })
        .unwrap();
        assert_eq!(cfg.max_tokens, 64);
        assert_eq!(cfg.parallelism, 1);
        assert!(LlmConfig::from_lookup(|_| None).is_err());
    }

    #[test]
    fn http_client_round_trip() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let server = std::thread::spawn(move || {
            let (mut stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
            }
            let mut body = vec![0; len];
            reader.read_exact(&mut body).unwrap();
            let req: Value = serde_json::from_slice(&body).unwrap();
            assert_eq!(req["model"], "test-model");
            let reply = json!({"choices": [{"message": {"content": "(a=innocent, c=guilty)"}}]}).to_string();
            write!(
                stream,
                "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
                reply.len(),
                reply
            )
            .unwrap();
        });
        let client = HttpCompletionClient::new(LlmConfig {
            url: format!("http://{addr}/v1/chat/completions"),
            model: "test-model".into(),
            api_key: Some("k".into()),
            temperature: 0.7,
            max_tokens: 32,
            timeout: Duration::from_secs(5),
            parallelism: 1,
        });
        let text = client.complete("prompt", 0.0).unwrap();
        assert_eq!(parse_announcement(&text, 1).unwrap(), Announcement::new(1, false, true));
        server.join().unwrap();
    }

    #[test]
    fn unreachable_endpoint_surfaces_error() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        drop(listener);
        let game = CopGame::new(CopConfig::default()).unwrap();
        let adapter = LlmAdapter::from_config(LlmConfig {
            url: format!("http://{addr}/"),
            model: "m".into(),
            api_key: None,
            temperature: 0.7,
            max_tokens: 8,
            timeout: Duration::from_secs(2),
            parallelism: 1,
        });
        let err = adapter
            .decide(&game, &game.initial_state(), 0, PersonalityType::ConArtist, 0.7)
            .unwrap_err();
        assert!(matches!(err, Error::External { .. }));
    }
}

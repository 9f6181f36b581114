//! JSON-lines game transcripts: one message or announcement per line with
//! `sender`, `recipient` and `text` fields.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use interplay_core::{Error, Result};

use super::{letter, others, CopState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    /// `message` or `announcement`.
    pub kind: String,
    pub round: usize,
    pub sender: String,
    /// A letter for messages; `all` for announcements.
    pub recipient: String,
    pub text: String,
    /// Scripted template id (`free_text` for model-written messages).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<String>,
}

/// Transcript of everything that has happened in `state`.
pub fn records(state: &CopState) -> Vec<LogRecord> {
    let mut out: Vec<LogRecord> = state
        .chat
        .iter()
        .map(|e| LogRecord {
            kind: "message".into(),
            round: e.round,
            sender: letter(e.message.sender).into(),
            recipient: letter(e.message.recipient).into(),
            text: e.message.text.clone(),
            template: Some(e.message.template.id()),
        })
        .collect();
    if let Some(anns) = &state.announcements {
        for a in anns {
            let [x, y] = others(a.by);
            let word = |g: bool| if g { "guilty" } else { "innocent" };
            out.push(LogRecord {
                kind: "announcement".into(),
                round: state.round,
                sender: letter(a.by).into(),
                recipient: "all".into(),
                text: format!("({}={}, {}={})", letter(x), word(a.guilty[x]), letter(y), word(a.guilty[y])),
                template: None,
            });
        }
    }
    out
}

pub fn write_jsonl(state: &CopState, mut out: impl Write) -> std::io::Result<()> {
    for r in records(state) {
        serde_json::to_writer(&mut out, &r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_jsonl(input: impl BufRead) -> Result<Vec<LogRecord>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::invalid(format!("reading log: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::invalid(format!("log line {}: {e}", i + 1)))?);
    }
    Ok(out)
}

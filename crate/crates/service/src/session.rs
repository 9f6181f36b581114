//! Live sessions and their JSON-lines event logs.
//!
//! A log starts with a `create` event carrying everything needed to rebuild
//! the game; each committed step appends an `act` event with the human's raw
//! action and the state fingerprint afterwards. Other seats draw from a
//! stream derived from the session seed and the step number, so replaying
//! the `act` events reproduces the session bit for bit.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use interplay_core::{Error, Parallelism, Result};
use interplay_games::dynamic::{AnyGame, StepRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Create {
        session_id: String,
        game: String,
        config: Value,
        seed: u64,
        human: usize,
        fingerprint: u64,
    },
    Act {
        action: Value,
        record: StepRecord,
        fingerprint: u64,
    },
    Explain {
        #[serde(rename = "type")]
        kind: String,
        params: Value,
        fingerprint: u64,
    },
}

pub struct Session {
    pub id: String,
    pub game: AnyGame,
    pub human: usize,
    pub seed: u64,
    /// Own lock so explain calls can log under a shared session lock.
    log: Option<Mutex<BufWriter<File>>>,
}

impl Session {
    pub fn create(
        id: String,
        game: &str,
        config: Value,
        seed: u64,
        human: usize,
        parallelism: Parallelism,
        log_dir: Option<&Path>,
    ) -> Result<Self> {
        let mut g = AnyGame::create(game, &config, seed)?;
        g.set_parallelism(parallelism);
        if human >= g.num_agents() {
            return Err(Error::invalid(format!(
                "human seat {human} out of range for a {}-agent game",
                g.num_agents()
            )));
        }
        let log = match log_dir {
            Some(dir) => Some(Mutex::new(open_log(&log_path(dir, &id))?)),
            None => None,
        };
        let s = Self {
            id: id.clone(),
            human,
            seed,
            log,
            game: g,
        };
        let fingerprint = s.game.fingerprint();
        s.record(&Event::Create {
            session_id: id,
            game: game.to_string(),
            config,
            seed,
            human,
            fingerprint,
        })?;
        Ok(s)
    }

    pub fn record(&self, event: &Event) -> Result<()> {
        if let Some(log) = &self.log {
            let io = |e: std::io::Error| Error::invalid(format!("writing session log: {e}"));
            let mut log = log.lock().unwrap_or_else(|e| e.into_inner());
            serde_json::to_writer(&mut *log, event).map_err(|e| Error::invalid(e.to_string()))?;
            log.write_all(b"\n").map_err(io)?;
            log.flush().map_err(io)?;
        }
        Ok(())
    }

    /// Commits the human's action; the other seats act per policy.
    pub fn act(&mut self, action: Value) -> Result<StepRecord> {
        let record = self.game.act(&[(self.human, action.clone())])?;
        let fingerprint = self.game.fingerprint();
        self.record(&Event::Act {
            action,
            record: record.clone(),
            fingerprint,
        })?;
        Ok(record)
    }
}

pub fn log_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.jsonl"))
}

fn open_log(path: &Path) -> Result<BufWriter<File>> {
    OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map(BufWriter::new)
        .map_err(|e| Error::invalid(format!("opening session log {}: {e}", path.display())))
}

pub fn read_events(path: &Path) -> Result<Vec<Event>> {
    let file = File::open(path).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| Error::invalid(format!("{} line {}: {e}", path.display(), n + 1)))?,
        );
    }
    Ok(out)
}

/// Rebuilds a session from its events, checking every recorded fingerprint.
pub fn replay(events: &[Event]) -> Result<Session> {
    let Some(Event::Create {
        session_id,
        game,
        config,
        seed,
        human,
        fingerprint,
    }) = events.first()
    else {
        return Err(Error::invalid("a session log must start with a create event"));
    };
    let mut s = Session::create(
        session_id.clone(),
        game,
        config.clone(),
        *seed,
        *human,
        Parallelism::default(),
        None,
    )?;
    let check = |want: u64, got: u64, at: usize| {
        if want == got {
            Ok(())
        } else {
            Err(Error::invalid(format!("replay diverged at event {at}: fingerprint {got} != {want}")))
        }
    };
    check(*fingerprint, s.game.fingerprint(), 0)?;
    for (i, e) in events.iter().enumerate().skip(1) {
        match e {
            Event::Act {
                action,
                record,
                fingerprint,
            } => {
                let got = s.act(action.clone())?;
                if &got != record {
                    return Err(Error::invalid(format!("replay diverged at event {i}: step record differs")));
                }
                check(*fingerprint, s.game.fingerprint(), i)?;
            }
            Event::Explain { fingerprint, .. } => check(*fingerprint, s.game.fingerprint(), i)?,
            Event::Create { .. } => return Err(Error::invalid(format!("second create event at line {}", i + 1))),
        }
    }
    Ok(s)
}

//! Human friend/enemy annotations and their comparison with rankings.
//!
//! JSON-lines format, one record per line:
//! `{"state_id": "s3", "annotator": "A", "agent": 0, "friends": [2, null], "enemies": [1]}`.
//! The second slot of either list may be `null` (left unfilled).

use std::collections::HashMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use interplay_core::explain::RelationRanking;
use interplay_core::{AgentId, Error, Result};

use crate::ranking::{expected_random_ap, map_bounds, mean_average_precision, MapScore, PartialRecord};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub state_id: String,
    pub annotator: String,
    pub agent: AgentId,
    pub friends: Vec<Option<AgentId>>,
    pub enemies: Vec<Option<AgentId>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationList {
    Friends,
    Enemies,
}

impl AnnotationRecord {
    pub fn slots(&self, list: RelationList) -> &[Option<AgentId>] {
        match list {
            RelationList::Friends => &self.friends,
            RelationList::Enemies => &self.enemies,
        }
    }

    pub fn filled(&self, list: RelationList) -> Vec<AgentId> {
        self.slots(list).iter().flatten().copied().collect()
    }

    pub fn validate(&self, num_agents: usize) -> Result<()> {
        let bad = |msg: String| Error::invalid(format!("annotation {}/{}: {msg}", self.state_id, self.annotator));
        if self.agent.index() >= num_agents {
            return Err(bad(format!("agent {} out of range", self.agent)));
        }
        let mut seen = Vec::new();
        for (name, slots) in [("friends", &self.friends), ("enemies", &self.enemies)] {
            if slots.is_empty() || slots.len() > 2 {
                return Err(bad(format!("{name} must have 1 or 2 slots")));
            }
            if slots[0].is_none() {
                return Err(bad(format!("the first {name} slot must be filled")));
            }
            for a in slots.iter().flatten() {
                if a.index() >= num_agents {
                    return Err(bad(format!("agent {a} out of range")));
                }
                if *a == self.agent {
                    return Err(bad(format!("acting agent {a} listed in {name}")));
                }
                if seen.contains(a) {
                    return Err(bad(format!("agent {a} listed twice")));
                }
                seen.push(*a);
            }
        }
        Ok(())
    }

    /// Reference for `list` with unfilled slots completable from the agents
    /// not already annotated (a completion never puts an agent in both lists).
    pub fn partial(&self, list: RelationList, predicted: Vec<AgentId>, num_agents: usize) -> PartialRecord<AgentId> {
        let annotated: Vec<AgentId> = self.friends.iter().chain(&self.enemies).flatten().copied().collect();
        let own = self.filled(list);
        let pool = (0..num_agents)
            .map(AgentId)
            .filter(|a| *a != self.agent && (own.contains(a) || !annotated.contains(a)))
            .collect();
        PartialRecord {
            predicted,
            slots: self.slots(list).to_vec(),
            pool,
        }
    }
}

pub fn read_annotations(input: impl BufRead, num_agents: usize) -> Result<Vec<AnnotationRecord>> {
    let mut out = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::invalid(format!("reading annotations: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: AnnotationRecord = serde_json::from_str(&line)
            .map_err(|e| Error::invalid(format!("annotation line {}: {e}", n + 1)))?;
        record.validate(num_agents)?;
        out.push(record);
    }
    Ok(out)
}

pub fn write_annotations(records: &[AnnotationRecord], mut out: impl Write) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ListScores {
    pub friends: MapScore,
    pub enemies: MapScore,
}

impl ListScores {
    pub fn get(&self, list: RelationList) -> &MapScore {
        match list {
            RelationList::Friends => &self.friends,
            RelationList::Enemies => &self.enemies,
        }
    }
}

fn check_nonempty(records: &[AnnotationRecord]) -> Result<()> {
    if records.is_empty() {
        return Err(Error::invalid("no annotation records"));
    }
    Ok(())
}

/// MAP@K of predicted rankings against the filled annotation slots.
pub fn evaluate_rankings(
    records: &[AnnotationRecord],
    k: usize,
    mut predict: impl FnMut(&AnnotationRecord) -> Result<RelationRanking>,
) -> Result<ListScores> {
    check_nonempty(records)?;
    let mut friends = Vec::with_capacity(records.len());
    let mut enemies = Vec::with_capacity(records.len());
    for r in records {
        let ranking = predict(r)?;
        if ranking.agent != r.agent {
            return Err(Error::invalid(format!("ranking for agent {} given for agent {}", ranking.agent, r.agent)));
        }
        friends.push((ranking.friends, r.filled(RelationList::Friends)));
        enemies.push((ranking.enemies, r.filled(RelationList::Enemies)));
    }
    Ok(ListScores {
        friends: mean_average_precision(&friends, k)?,
        enemies: mean_average_precision(&enemies, k)?,
    })
}

/// Expected MAP@K of uniformly random rankings for this annotation multiset.
pub fn random_expectation(records: &[AnnotationRecord], k: usize, num_agents: usize) -> Result<(f64, f64)> {
    check_nonempty(records)?;
    let mut sums = [0.0; 2];
    for r in records {
        for (s, list) in [RelationList::Friends, RelationList::Enemies].into_iter().enumerate() {
            sums[s] += expected_random_ap(num_agents - 1, r.filled(list).len(), k)?;
        }
    }
    let n = records.len() as f64;
    Ok((sums[0] / n, sums[1] / n))
}

/// Agreement bounds of annotator `a` against the partial rankings of `b`.
///
/// Records are matched by (state, agent); `a`'s filled slots act as the
/// prediction. Not symmetric in `a` and `b`.
pub fn inter_annotator(
    a: &[AnnotationRecord],
    b: &[AnnotationRecord],
    k: usize,
    num_agents: usize,
) -> Result<ListScores> {
    let index: HashMap<(&str, AgentId), &AnnotationRecord> =
        b.iter().map(|r| ((r.state_id.as_str(), r.agent), r)).collect();
    let mut friends = Vec::new();
    let mut enemies = Vec::new();
    for ra in a {
        let Some(rb) = index.get(&(ra.state_id.as_str(), ra.agent)) else {
            continue;
        };
        friends.push(rb.partial(RelationList::Friends, ra.filled(RelationList::Friends), num_agents));
        enemies.push(rb.partial(RelationList::Enemies, ra.filled(RelationList::Enemies), num_agents));
    }
    if friends.is_empty() {
        return Err(Error::invalid("the two annotators share no (state, agent) pair"));
    }
    Ok(ListScores {
        friends: map_bounds(&friends, k)?,
        enemies: map_bounds(&enemies, k)?,
    })
}

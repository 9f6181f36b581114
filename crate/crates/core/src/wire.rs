//! JSON forms of explanations and counterfactual queries shared by the CLI and
//! the HTTP service.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::counterfactual::{Constraint, CounterfactualParams, CounterfactualResult};
use crate::env::GameAction;
use crate::explain::{ProbableActions, ProbableTrajectory, SbueExplanation};
use crate::simulate::PinDescription;
use crate::stats::RelationMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalActionWire {
    pub agent: usize,
    pub turn: usize,
    pub action: String,
    pub frequency: f64,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub detail: Value,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WireMeta {
    pub k: usize,
    pub d: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standardized: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degenerate_mask: Option<Vec<bool>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pinned: Vec<PinDescription>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub greedy_decode: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub truncated: bool,
}

/// `{type, agents, values, matrix, modal_actions, meta}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationWire {
    #[serde(rename = "type")]
    pub kind: String,
    pub agents: Vec<String>,
    pub values: Option<Vec<f64>>,
    pub matrix: Option<Vec<Vec<f64>>>,
    pub modal_actions: Option<Vec<ModalActionWire>>,
    pub meta: WireMeta,
}

impl ExplanationWire {
    pub fn from_sbue(agents: Vec<String>, e: &SbueExplanation, seed: u64) -> Self {
        Self {
            kind: "sbue".into(),
            agents,
            values: Some(e.expected_utility.0.clone()),
            matrix: None,
            modal_actions: None,
            meta: WireMeta {
                k: e.k_used,
                d: 1,
                seed,
                standardized: e.standardized.as_ref().map(|s| s.values.0.clone()),
                degenerate_mask: e.standardized.as_ref().map(|s| s.degenerate.clone()),
                pinned: e.pinned.clone(),
                ..Default::default()
            },
        }
    }

    pub fn from_sica(agents: Vec<String>, m: &RelationMatrix, seed: u64) -> Self {
        Self {
            kind: "sica".into(),
            agents,
            values: None,
            matrix: Some(m.r.clone()),
            modal_actions: None,
            meta: WireMeta {
                k: m.k_used,
                d: m.d_used,
                seed,
                degenerate_mask: Some(m.degenerate_mask.clone()),
                ..Default::default()
            },
        }
    }

    pub fn from_probable<A: GameAction + Serialize>(
        agents: Vec<String>,
        p: &ProbableActions<A>,
        pinned: Vec<PinDescription>,
        seed: u64,
    ) -> Self {
        Self {
            kind: "probable".into(),
            agents,
            values: None,
            matrix: None,
            modal_actions: Some(modal_wire(p, 0)),
            meta: WireMeta {
                k: p.k_used,
                d: 1,
                seed,
                pinned,
                greedy_decode: p.greedy_decode,
                ..Default::default()
            },
        }
    }

    pub fn from_trajectory<A: GameAction + Serialize>(
        agents: Vec<String>,
        t: &ProbableTrajectory<A>,
        k: usize,
        pinned: Vec<PinDescription>,
        seed: u64,
    ) -> Self {
        let modal = t
            .turns
            .iter()
            .enumerate()
            .flat_map(|(turn, pt)| modal_wire(&pt.actions, turn))
            .collect();
        Self {
            kind: "trajectory".into(),
            agents,
            values: None,
            matrix: None,
            modal_actions: Some(modal),
            meta: WireMeta {
                k,
                d: t.turns.len(),
                seed,
                pinned,
                greedy_decode: t.turns.iter().any(|pt| pt.actions.greedy_decode),
                truncated: t.truncated,
                ..Default::default()
            },
        }
    }
}

fn modal_wire<A: GameAction + Serialize>(p: &ProbableActions<A>, turn: usize) -> Vec<ModalActionWire> {
    p.agents
        .iter()
        .map(|a| ModalActionWire {
            agent: a.agent.index(),
            turn,
            action: a.modal.canonical(),
            frequency: a.frequency,
            detail: serde_json::to_value(&a.modal).unwrap_or(Value::Null),
        })
        .collect()
}

/// `{agent, reference_action, constraints: [{polarity, unit, order}], kappa, alpha, beta, top_n}`.
///
/// `reference_action` is game-specific JSON; omitted hyperparameters take the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryWire {
    pub agent: usize,
    pub reference_action: Value,
    #[serde(default)]
    pub constraints: Vec<Constraint>,
    #[serde(default)]
    pub kappa: Option<f64>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub top_n: Option<usize>,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub utility_samples: Option<usize>,
}

impl QueryWire {
    pub fn params(&self) -> CounterfactualParams {
        let d = CounterfactualParams::default();
        CounterfactualParams {
            kappa: self.kappa.unwrap_or(d.kappa),
            alpha: self.alpha.unwrap_or(d.alpha),
            beta: self.beta.unwrap_or(d.beta),
            top_n: self.top_n.unwrap_or(d.top_n),
            samples: self.samples.unwrap_or(d.samples),
            utility_samples: self.utility_samples.unwrap_or(d.utility_samples),
            ..d
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredWire {
    pub action: String,
    pub detail: Value,
    pub similarity: f64,
    pub expected_own_utility: f64,
    pub normalized_utility: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualWire {
    #[serde(rename = "type")]
    pub kind: String,
    pub agent: usize,
    pub reference_action: String,
    pub results: Vec<ScoredWire>,
    pub feasible_count: usize,
    pub from_enumeration: bool,
    pub params: CounterfactualParams,
    pub seed: u64,
}

impl CounterfactualWire {
    pub fn new<A: GameAction + Serialize>(
        agent: usize,
        reference: &A,
        result: &CounterfactualResult<A>,
        params: CounterfactualParams,
        seed: u64,
    ) -> Self {
        Self {
            kind: "counterfactual".into(),
            agent,
            reference_action: reference.canonical(),
            results: result
                .ranked
                .iter()
                .map(|s| ScoredWire {
                    action: s.action.canonical(),
                    detail: serde_json::to_value(&s.action).unwrap_or(Value::Null),
                    similarity: s.similarity,
                    expected_own_utility: s.expected_own_utility,
                    normalized_utility: s.normalized_utility,
                    score: s.score,
                })
                .collect(),
            feasible_count: result.feasible_count,
            from_enumeration: result.from_enumeration,
            params,
            seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn query_wire_defaults_and_constraint_shape() {
        let q: QueryWire = serde_json::from_str(
            r#"{"agent":1,"reference_action":"x","constraints":[{"polarity":"forbid","unit":"u1","order":"hold"}],"kappa":0.1}"#,
        )
        .unwrap();
        assert_eq!(q.constraints, vec![Constraint::forbid("u1", "hold")]);
        let p = q.params();
        assert_eq!(p.kappa, 0.1);
        assert_eq!((p.alpha, p.beta, p.top_n, p.samples), (1.0, 1.0, 3, 500));
    }

    #[test]
    fn sica_wire_has_required_keys() {
        let m = RelationMatrix {
            r: vec![vec![1.0, -0.5], vec![-0.5, 1.0]],
            degenerate_mask: vec![false, false],
            k_used: 10,
            d_used: 2,
        };
        let v = serde_json::to_value(ExplanationWire::from_sica(vec!["a".into(), "b".into()], &m, 9)).unwrap();
        for key in ["type", "agents", "values", "matrix", "modal_actions", "meta"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["meta"]["k"], 10);
        assert_eq!(v["meta"]["d"], 2);
        assert_eq!(v["meta"]["seed"], 9);
    }
}

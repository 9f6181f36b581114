use std::sync::Arc;

use proptest::prelude::*;
use serde_json::json;

use interplay_core::counterfactual::{
    counterfactuals, exact_own_utility, feasible_set, order_similarity, satisfies, Constraint, CounterfactualParams,
    CounterfactualQuery, FeasibleStatus,
};
use interplay_core::explain::{sbue, sica};
use interplay_core::{
    AgentId, Environment, GameAction, PinnedActionSet, Policy, SeededRng, Simulator, UniformPolicy,
};
use interplay_games::skirmish::{HeuristicPolicy, HeuristicValue, SkirmishGame};

fn uniform(n: usize) -> Vec<Arc<dyn Policy<SkirmishGame>>> {
    (0..n).map(|_| Arc::new(UniformPolicy) as Arc<dyn Policy<SkirmishGame>>).collect()
}

fn duel() -> SkirmishGame {
    SkirmishGame::from_json(
        &json!({
            "agents": ["red", "blue"],
            "max_turns": 4,
            "territories": [
                {"id": "R1", "owner": "red", "armies": 3, "adjacent": ["R2", "N1"]},
                {"id": "R2", "owner": "red", "armies": 2, "adjacent": ["R1", "N2"]},
                {"id": "N1", "owner": null, "armies": 1, "adjacent": ["R1", "B1"]},
                {"id": "N2", "owner": null, "armies": 1, "adjacent": ["R2", "B2"]},
                {"id": "B1", "owner": "blue", "armies": 3, "adjacent": ["N1", "B2"]},
                {"id": "B2", "owner": "blue", "armies": 2, "adjacent": ["N2", "B1"]}
            ]
        })
        .to_string(),
    )
    .unwrap()
}

#[test]
fn two_player_relation_is_minus_one() {
    let game = duel();
    let policies = uniform(2);
    let sim = Simulator::new(&game, &policies, &HeuristicValue).unwrap();
    let s = game.initial_board();
    let m = sica(&sim, &s, 500, 1, SeededRng::new(3)).unwrap();
    assert!((m.r[0][1] + 1.0).abs() < 1e-9, "{}", m.r[0][1]);

    // Deeper rollouts stay exactly anti-correlated without discounting.
    let undiscounted = duel().with_gamma(1.0).unwrap();
    let sim = Simulator::new(&undiscounted, &policies, &HeuristicValue).unwrap();
    let m = sica(&sim, &s, 300, 6, SeededRng::new(3)).unwrap();
    assert!((m.r[0][1] + 1.0).abs() < 1e-9, "{}", m.r[0][1]);
}

#[test]
fn sbue_rewards_a_strong_attack() {
    let game = duel();
    let policies: Vec<Arc<dyn Policy<SkirmishGame>>> = vec![Arc::new(HeuristicPolicy { aggression: 1.0 }); 2];
    let sim = Simulator::new(&game, &policies, &HeuristicValue).unwrap();
    let s = game.initial_board();
    let attack = game.parse_action("R1:attack(N1) R2:hold").unwrap();
    let hold = game.parse_action("R1:hold R2:hold").unwrap();
    let u_attack = sbue(&sim, &s, &PinnedActionSet::single(AgentId(0), attack), 400, None, SeededRng::new(1)).unwrap();
    let u_hold = sbue(&sim, &s, &PinnedActionSet::single(AgentId(0), hold), 400, None, SeededRng::new(1)).unwrap();
    assert!(u_attack.expected_utility.get(0) > u_hold.expected_utility.get(0));
    for u in [&u_attack, &u_hold] {
        let total: f64 = u.expected_utility.0.iter().sum();
        assert!((total - game.gamma).abs() < 1e-12);
    }
}

/// Small random boards: a path of 3-4 territories with two agents.
fn small_board(seed: u64) -> SkirmishGame {
    let n = 3 + (seed % 2) as usize;
    let territories: Vec<_> = (0..n)
        .map(|i| {
            let owner = if i == 0 {
                json!(0)
            } else if i == n - 1 {
                json!(1)
            } else if (seed >> i) & 1 == 1 {
                json!(0)
            } else {
                json!(null)
            };
            let adjacent: Vec<String> = [i.checked_sub(1), Some(i + 1).filter(|j| *j < n)]
                .iter()
                .flatten()
                .map(|j| format!("T{j}"))
                .collect();
            json!({"id": format!("T{i}"), "owner": owner, "armies": 1 + (seed as usize + i) % 3, "adjacent": adjacent})
        })
        .collect();
    SkirmishGame::from_json(&json!({"agents": 2, "max_turns": 2, "territories": territories}).to_string()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn counterfactual_properties(seed in 0u64..1_000, pick in 0usize..1_000, forbid in any::<bool>(), kappa_step in 0usize..4) {
        let game = small_board(seed);
        let policies = uniform(2);
        let sim = Simulator::new(&game, &policies, &HeuristicValue).unwrap();
        let s = game.initial_board();
        let agent = AgentId((seed % 2) as usize);
        let legal = game.legal_actions(&s, agent);
        let legal = legal.enumerated().unwrap();
        let reference = legal[pick % legal.len()].clone();
        let sub = &reference.sub_orders()[0];
        let constraint = if forbid {
            Constraint::forbid(sub.unit.clone(), sub.order.clone())
        } else {
            let other = &legal[(pick / 7) % legal.len()].sub_orders()[0];
            Constraint::require(other.unit.clone(), other.order.clone())
        };
        let query = CounterfactualQuery::new(agent, reference.clone(), vec![constraint]).unwrap();

        // κ-monotone feasible sets from the same sample.
        let mut previous: Option<Vec<String>> = None;
        for kappa in [0.0, 0.01, 0.05, 0.2] {
            let f = feasible_set(&sim, &s, &query, kappa, 300, SeededRng::new(seed)).unwrap();
            let names: Vec<String> = f.candidates.iter().map(|c| c.action.canonical()).collect();
            for c in &f.candidates {
                prop_assert!(satisfies(&c.action, &query.constraints));
                prop_assert!(c.action != reference);
            }
            if let Some(prev) = &previous {
                prop_assert!(names.iter().all(|n| prev.contains(n)), "kappa {kappa} grew the set");
            }
            previous = Some(names);
        }

        let kappa = [0.0, 0.01, 0.05, 0.2][kappa_step];
        let base = CounterfactualParams { kappa, samples: 300, exact_utility: true, top_n: 1_000, ..Default::default() };
        let feasible = feasible_set(&sim, &s, &query, kappa, base.samples, SeededRng::new(seed).derive(1)).unwrap();
        if feasible.status != FeasibleStatus::Ok {
            prop_assert!(counterfactuals(&sim, &s, &query, &base, SeededRng::new(seed)).is_err());
            return Ok(());
        }
        let candidates: Vec<_> = feasible.candidates.iter().map(|c| c.action.clone()).collect();
        let utilities: Vec<f64> = candidates.iter().map(|a| exact_own_utility(&sim, &s, agent, a).unwrap()).collect();

        let by_utility = counterfactuals(&sim, &s, &query, &CounterfactualParams { alpha: 0.0, beta: 1.0, ..base }, SeededRng::new(seed)).unwrap();
        for r in &by_utility.ranked {
            prop_assert!(satisfies(&r.action, &query.constraints) && r.action != reference);
        }
        let best_u = utilities.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(by_utility.ranked[0].expected_own_utility, best_u);

        let by_similarity = counterfactuals(&sim, &s, &query, &CounterfactualParams { alpha: 1.0, beta: 0.0, ..base }, SeededRng::new(seed)).unwrap();
        let best_sim = candidates.iter().map(|a| order_similarity(&reference, a)).fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(by_similarity.ranked[0].similarity, best_sim);
    }
}

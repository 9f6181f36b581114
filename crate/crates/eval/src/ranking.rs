//! MAP@K against (possibly partial) reference rankings, and the random and
//! strength-ordered baselines.
//!
//! AP@K = Σ_{i≤K} precision@i · rel(i) / min(K, |reference|). The reference is
//! used as a set; its order only matters for which slots are unfilled.

use std::collections::HashSet;
use std::hash::Hash;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use interplay_core::explain::RelationRanking;
use interplay_core::{AgentId, Environment, Error, Result, SeededRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApScore {
    pub value: f64,
    /// The reference was empty; `value` is then defined as 0.
    pub empty_reference: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapScore {
    pub value: f64,
    pub k: usize,
    pub n: usize,
    /// Records whose reference was empty (each scored 0).
    pub empty_references: usize,
    /// (lower, upper) over completions of unfilled reference slots.
    pub bounds: Option<(f64, f64)>,
}

fn check_k_and_duplicates<T: Eq + Hash>(predicted: &[T], k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::invalid("K must be at least 1"));
    }
    let mut seen = HashSet::with_capacity(predicted.len());
    if !predicted.iter().all(|x| seen.insert(x)) {
        return Err(Error::invalid("predicted ranking contains duplicates"));
    }
    Ok(())
}

pub fn average_precision_at_k<T: Eq + Hash>(predicted: &[T], reference: &[T], k: usize) -> Result<ApScore> {
    check_k_and_duplicates(predicted, k)?;
    let relevant: HashSet<&T> = reference.iter().collect();
    if relevant.is_empty() {
        return Ok(ApScore {
            value: 0.0,
            empty_reference: true,
        });
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, item) in predicted.iter().take(k).enumerate() {
        if relevant.contains(item) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    Ok(ApScore {
        value: sum / k.min(relevant.len()) as f64,
        empty_reference: false,
    })
}

/// Mean AP@K over `(predicted, reference)` pairs.
pub fn mean_average_precision<T: Eq + Hash>(pairs: &[(Vec<T>, Vec<T>)], k: usize) -> Result<MapScore> {
    if pairs.is_empty() {
        return Err(Error::invalid("MAP over an empty set of records"));
    }
    let mut total = 0.0;
    let mut empty = 0;
    for (predicted, reference) in pairs {
        let ap = average_precision_at_k(predicted, reference, k)?;
        total += ap.value;
        empty += ap.empty_reference as usize;
    }
    Ok(MapScore {
        value: total / pairs.len() as f64,
        k,
        n: pairs.len(),
        empty_references: empty,
        bounds: None,
    })
}

/// One record for [`map_bounds`]: a prediction, a reference ranking whose
/// `None` slots are unfilled, and the pool the unfilled slots may be completed from.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialRecord<T> {
    pub predicted: Vec<T>,
    pub slots: Vec<Option<T>>,
    pub pool: Vec<T>,
}

/// Every way of filling the unfilled slots with distinct pool items not already
/// in the reference. Slots stay empty once the pool is exhausted.
pub fn completions<T: Clone + Eq + Hash>(slots: &[Option<T>], pool: &[T]) -> Vec<Vec<T>> {
    let filled: Vec<T> = slots.iter().flatten().cloned().collect();
    let open = slots.len() - filled.len();
    let mut remaining: Vec<T> = Vec::new();
    for x in pool {
        if !filled.contains(x) && !remaining.contains(x) {
            remaining.push(x.clone());
        }
    }
    let open = open.min(remaining.len());
    let mut out = Vec::new();
    let mut chosen = Vec::with_capacity(open);
    let mut used = vec![false; remaining.len()];
    fn go<T: Clone>(
        open: usize,
        remaining: &[T],
        used: &mut [bool],
        chosen: &mut Vec<T>,
        filled: &[T],
        out: &mut Vec<Vec<T>>,
    ) {
        if chosen.len() == open {
            out.push(filled.iter().chain(chosen.iter()).cloned().collect());
            return;
        }
        for j in 0..remaining.len() {
            if !used[j] {
                used[j] = true;
                chosen.push(remaining[j].clone());
                go(open, remaining, used, chosen, filled, out);
                chosen.pop();
                used[j] = false;
            }
        }
    }
    go(open, &remaining, &mut used, &mut chosen, &filled, &mut out);
    out
}

/// Smallest and largest AP@K over all completions of one record.
pub fn ap_bounds<T: Clone + Eq + Hash>(record: &PartialRecord<T>, k: usize) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for reference in completions(&record.slots, &record.pool) {
        let v = average_precision_at_k(&record.predicted, &reference, k)?.value;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((lo, hi))
}

/// MAP@K bounds over every completion of the unfilled reference slots.
///
/// Records are completed independently, so the extreme MAP values are the
/// means of the per-record extremes; this is the exhaustive optimum.
pub fn map_bounds<T: Clone + Eq + Hash>(records: &[PartialRecord<T>], k: usize) -> Result<MapScore> {
    if records.is_empty() {
        return Err(Error::invalid("MAP over an empty set of records"));
    }
    let mut lo = 0.0;
    let mut hi = 0.0;
    let mut empty = 0;
    for r in records {
        let (l, h) = ap_bounds(r, k)?;
        lo += l;
        hi += h;
        if r.slots.iter().all(Option::is_none) && r.pool.is_empty() {
            empty += 1;
        }
    }
    let n = records.len() as f64;
    let (lo, hi) = (lo / n, hi / n);
    Ok(MapScore {
        // Reported as midpoint ± half-width.
        value: (lo + hi) / 2.0,
        k,
        n: records.len(),
        empty_references: empty,
        bounds: Some((lo, hi)),
    })
}

/// Expected AP@K of a uniformly random ranking of `n` candidates against a
/// reference of `m` of them.
///
/// E[rel(i)·hits(i)] = m/n + (i−1)·m(m−1)/(n(n−1)), summed with weight 1/i.
pub fn expected_random_ap(n: usize, m: usize, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::invalid("K must be at least 1"));
    }
    if m > n {
        return Err(Error::invalid("reference larger than the candidate set"));
    }
    if m == 0 {
        return Ok(0.0);
    }
    let (nf, mf) = (n as f64, m as f64);
    let pair = if n > 1 { mf * (mf - 1.0) / (nf * (nf - 1.0)) } else { 0.0 };
    let sum: f64 = (1..=k.min(n))
        .map(|i| (mf / nf + (i - 1) as f64 * pair) / i as f64)
        .sum();
    Ok(sum / k.min(m) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMode {
    Random,
    Strength,
}

/// Friend/enemy ranking of the other agents without any simulation.
///
/// `Random`: independent seeded shuffles for friends and enemies. `Strength`:
/// friends by descending strength (ties by ascending id), enemies the reverse
/// order by ascending strength, mirroring how relation matrices are read.
pub fn baseline_ranking<E: Environment>(
    env: &E,
    state: &E::State,
    agent: AgentId,
    mode: BaselineMode,
    seed: SeededRng,
) -> Result<RelationRanking> {
    let p = env.num_agents();
    let i = AgentId::checked(agent.index(), p)?.index();
    let others: Vec<usize> = (0..p).filter(|j| *j != i).collect();
    let (friends, enemies) = match mode {
        BaselineMode::Random => {
            let mut friends = others.clone();
            friends.shuffle(&mut seed.stream(0));
            let mut enemies = others;
            enemies.shuffle(&mut seed.stream(1));
            (friends, enemies)
        }
        BaselineMode::Strength => {
            let strength = env
                .strength(state)
                .ok_or_else(|| Error::invalid("the strength baseline is unavailable for this game"))?;
            if strength.len() != p {
                return Err(Error::Dimension(format!("{} strengths for {p} agents", strength.len())));
            }
            let mut friends = others.clone();
            friends.sort_by(|a, b| strength[*b].total_cmp(&strength[*a]).then(a.cmp(b)));
            let mut enemies = others;
            enemies.sort_by(|a, b| strength[*a].total_cmp(&strength[*b]).then(a.cmp(b)));
            (friends, enemies)
        }
    };
    Ok(RelationRanking {
        agent,
        friends: friends.into_iter().map(AgentId).collect(),
        enemies: enemies.into_iter().map(AgentId).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ap_examples() {
        let perfect = average_precision_at_k(&["a", "b", "c"], &["a", "b"], 2).unwrap();
        assert_eq!(perfect.value, 1.0);
        let half = average_precision_at_k(&["B", "D"], &["B", "C"], 2).unwrap();
        assert_eq!(half.value, 0.5);
        let empty = average_precision_at_k(&["B", "D"], &[], 2).unwrap();
        assert_eq!((empty.value, empty.empty_reference), (0.0, true));
    }

    #[test]
    fn ap_rejects_bad_input() {
        assert!(average_precision_at_k(&[1, 1], &[1], 2).is_err());
        assert!(average_precision_at_k(&[1, 2], &[1], 0).is_err());
    }

    #[test]
    fn moving_a_relevant_item_up_never_lowers_ap() {
        let reference = [3, 5];
        let mut predicted = vec![1, 2, 3, 4, 5];
        let mut last = average_precision_at_k(&predicted, &reference, 4).unwrap().value;
        for pos in (1..5).rev() {
            predicted.swap(pos - 1, pos);
            let v = average_precision_at_k(&predicted, &reference, 4).unwrap().value;
            assert!(v >= last, "{predicted:?}");
            last = v;
        }
        assert_eq!(predicted[0], 5);
    }

    #[test]
    fn full_reference_has_tight_bounds() {
        let r = PartialRecord {
            predicted: vec![1, 2, 3],
            slots: vec![Some(2), Some(1)],
            pool: vec![1, 2, 3],
        };
        let exact = average_precision_at_k(&[1, 2, 3], &[2, 1], 2).unwrap().value;
        let m = map_bounds(&[r], 2).unwrap();
        assert_eq!(m.bounds, Some((exact, exact)));
        assert_eq!(m.value, exact);
    }

    #[test]
    fn one_open_slot_two_completions() {
        // Pool {1, 2, 3}; slot 1 is agent 2, slot 2 is either 1 or 3.
        let r = PartialRecord {
            predicted: vec![3, 2, 1],
            slots: vec![Some(2), None],
            pool: vec![1, 2, 3],
        };
        assert_eq!(completions(&r.slots, &r.pool), vec![vec![2, 1], vec![2, 3]]);
        let with_1 = average_precision_at_k(&r.predicted, &[2, 1], 2).unwrap().value;
        let with_3 = average_precision_at_k(&r.predicted, &[2, 3], 2).unwrap().value;
        assert_eq!(ap_bounds(&r, 2).unwrap(), (with_1.min(with_3), with_1.max(with_3)));
    }

    #[test]
    fn random_expectation_small_cases() {
        // One relevant among two: AP@1 is 1 half the time.
        assert_eq!(expected_random_ap(2, 1, 1).unwrap(), 0.5);
        // Everything relevant: always 1.
        assert!((expected_random_ap(3, 3, 3).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(expected_random_ap(3, 0, 2).unwrap(), 0.0);
        // n = 3, m = 1, K = 2: P(first) = 1/3 → 1, P(second) = 1/3 → 1/2.
        assert!((expected_random_ap(3, 1, 2).unwrap() - 0.5).abs() < 1e-15);
    }
}

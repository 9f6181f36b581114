use std::collections::HashSet;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use interplay_eval::ranking::{ap_bounds, average_precision_at_k, map_bounds, PartialRecord};

/// Sum of hits/position over the sorted positions of the relevant items found
/// in the top K, normalised by min(K, |reference|).
fn brute_force_ap(predicted: &[u32], reference: &[u32], k: usize) -> f64 {
    let relevant: HashSet<u32> = reference.iter().copied().collect();
    if relevant.is_empty() {
        return 0.0;
    }
    let top = &predicted[..k.min(predicted.len())];
    let mut positions: Vec<usize> = relevant
        .iter()
        .filter_map(|r| top.iter().position(|p| p == r))
        .map(|i| i + 1)
        .collect();
    positions.sort_unstable();
    let mut sum = 0.0;
    for (found, pos) in positions.iter().enumerate() {
        sum += (found + 1) as f64 / *pos as f64;
    }
    sum / k.min(relevant.len()) as f64
}

fn subset(rng: &mut StdRng, universe: &[u32], max: usize) -> Vec<u32> {
    let n = rng.gen_range(0..=max.min(universe.len()));
    let mut u = universe.to_vec();
    u.shuffle(rng);
    u.truncate(n);
    u
}

#[test]
fn average_precision_matches_brute_force() {
    let mut rng = StdRng::seed_from_u64(11);
    let universe: Vec<u32> = (0..8).collect();
    for _ in 0..1000 {
        let predicted = subset(&mut rng, &universe, 8);
        let reference = subset(&mut rng, &universe, 4);
        let k = rng.gen_range(1..=6);
        let ap = average_precision_at_k(&predicted, &reference, k).unwrap();
        assert_eq!(ap.value, brute_force_ap(&predicted, &reference, k), "{predicted:?} {reference:?} K={k}");
        assert!((0.0..=1.0).contains(&ap.value));
        assert_eq!(ap.empty_reference, reference.is_empty());
    }
}

fn random_record(rng: &mut StdRng, universe: &[u32]) -> PartialRecord<u32> {
    let predicted = subset(rng, universe, universe.len());
    let mut reference = subset(rng, universe, 3);
    if reference.is_empty() {
        reference.push(universe[0]);
    }
    let slots: Vec<Option<u32>> = reference
        .into_iter()
        .enumerate()
        .map(|(i, x)| (i == 0 || rng.gen_bool(0.5)).then_some(x))
        .collect();
    PartialRecord {
        predicted,
        slots,
        pool: universe.to_vec(),
    }
}

fn random_completion(rng: &mut StdRng, r: &PartialRecord<u32>) -> Vec<u32> {
    let filled: Vec<u32> = r.slots.iter().flatten().copied().collect();
    let mut rest: Vec<u32> = r.pool.iter().copied().filter(|x| !filled.contains(x)).collect();
    rest.shuffle(rng);
    let open = r.slots.len() - filled.len();
    filled.into_iter().chain(rest.into_iter().take(open)).collect()
}

#[test]
fn bounds_bracket_random_completions() {
    let mut rng = StdRng::seed_from_u64(5);
    for _ in 0..1000 {
        let p = rng.gen_range(3..=7);
        let universe: Vec<u32> = (0..p).collect();
        let records: Vec<PartialRecord<u32>> = (0..rng.gen_range(1..=4)).map(|_| random_record(&mut rng, &universe)).collect();
        let k = rng.gen_range(1..=3);
        let score = map_bounds(&records, k).unwrap();
        let (lo, hi) = score.bounds.unwrap();
        assert!(lo <= score.value && score.value <= hi);
        for _ in 0..100 {
            let map: f64 = records
                .iter()
                .map(|r| average_precision_at_k(&r.predicted, &random_completion(&mut rng, r), k).unwrap().value)
                .sum::<f64>()
                / records.len() as f64;
            assert!(lo - 1e-12 <= map && map <= hi + 1e-12, "{lo} <= {map} <= {hi}");
        }
        for r in &records {
            let (l, h) = ap_bounds(r, k).unwrap();
            assert!(l <= h);
        }
    }
}

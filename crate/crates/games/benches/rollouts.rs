use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use interplay_core::{Parallelism, PinnedActionSet, Policy, SeededRng, Simulator};
use interplay_games::cop::{standard_policies, CopConfig, CopGame, CopMcValue};
use interplay_games::skirmish::{HeuristicPolicy, HeuristicValue, SkirmishGame};

fn modes() -> Vec<(&'static str, Parallelism)> {
    vec![("sequential", Parallelism::sequential()), ("parallel", Parallelism::available())]
}

fn skirmish(c: &mut Criterion) {
    let game = SkirmishGame::ring(3, 3).unwrap();
    let policies: Vec<Arc<dyn Policy<SkirmishGame>>> = vec![Arc::new(HeuristicPolicy { aggression: 1.0 }); 3];
    let state = game.initial_board();
    let mut group = c.benchmark_group("skirmish_simulate_k2000_d4");
    for (name, mode) in modes() {
        let sim = Simulator::new(&game, &policies, &HeuristicValue).unwrap().with_parallelism(mode);
        group.bench_with_input(BenchmarkId::from_parameter(name), &sim, |b, sim| {
            b.iter(|| sim.simulate(&state, 2000, 4, &PinnedActionSet::new(), SeededRng::new(1)).unwrap())
        });
    }
    group.finish();
}

fn cop(c: &mut Criterion) {
    let game = CopGame::new(CopConfig::default()).unwrap();
    let policies = standard_policies(&game.config.personalities);
    let values = CopMcValue {
        policies: policies.clone(),
        rollouts: game.config.value_rollouts,
        seed: 0,
    };
    let state = game.initial_state();
    let mut group = c.benchmark_group("cop_simulate_k500_d1");
    group.sample_size(20);
    for (name, mode) in modes() {
        let sim = Simulator::new(&game, &policies, &values).unwrap().with_parallelism(mode);
        group.bench_with_input(BenchmarkId::from_parameter(name), &sim, |b, sim| {
            b.iter(|| sim.simulate(&state, 500, 1, &PinnedActionSet::new(), SeededRng::new(1)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, skirmish, cop);
criterion_main!(benches);

use std::collections::{BTreeMap, HashMap};
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use evflow::assign::Assigner;
use evflow::fixtures::{self, Bundle};
use evflow::strategy::{Occupancy, PlanMode, StrategyContext, StrategyParams, TransitNetwork};
use evflow::{shortest_path, SolverConfig};

fn fixtures() -> [(&'static str, Bundle); 3] {
    [
        ("diamond", fixtures::diamond()),
        ("braess", fixtures::braess()),
        ("bottleneck", fixtures::bottleneck()),
    ]
}

fn path_search(c: &mut Criterion) {
    let b = fixtures::bottleneck();
    let net = b.network();
    let costs: HashMap<String, f64> = net
        .links()
        .iter()
        .map(|l| (l.edge_id.clone(), l.freeflow_time))
        .collect();
    c.bench_function("shortest_path/bottleneck", |bench| {
        bench.iter(|| shortest_path(&net, black_box(&costs), "O1", "D").unwrap())
    });
}

fn equilibrium(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_ue");
    for (name, b) in fixtures() {
        let net = b.network();
        let assigner = Assigner::new(&net, &b.zones, SolverConfig::default()).unwrap();
        group.bench_function(name, |bench| {
            bench.iter(|| assigner.solve_ue(black_box(b.hour_demand())).unwrap())
        });
    }
    group.finish();
}

fn strategy(c: &mut Criterion) {
    let b = fixtures::bottleneck();
    let net = b.network();
    let assigner = Assigner::new(&net, &b.zones, SolverConfig::default()).unwrap();
    let before = assigner.solve_ue(b.hour_demand()).unwrap();
    let transit = TransitNetwork::new(b.lines.clone()).unwrap();
    let tourists = BTreeMap::new();
    let ctx = StrategyContext {
        assigner: &assigner,
        zones: &b.zones,
        transit: &transit,
        demand: b.hour_demand(),
        tourist_vehicles: &tourists,
        occupancy: Occupancy::default(),
        before: &before,
    };
    let mut group = c.benchmark_group("strategy_evaluate");
    for mode in [PlanMode::Marginal, PlanMode::Uniform] {
        let params = StrategyParams {
            top_k: 2,
            mode,
            ..StrategyParams::default()
        };
        group.bench_function(mode.to_string(), |bench| {
            bench.iter(|| ctx.evaluate(black_box(&params)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, path_search, equilibrium, strategy);
criterion_main!(benches);

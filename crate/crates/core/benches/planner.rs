use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use scplan::experiment::{build_scenario, estimate_spec, plan_mode, ConfigFile, PlannerMode};
use scplan::planner::PlanningDemand;
use scplan::sla::SpecMethod;
use scplan::Exec;

const MODES: [(&str, Exec); 2] = [
    ("sequential", Exec::Sequential),
    ("parallel", Exec::Parallel),
];

fn evaluate(c: &mut Criterion) {
    let scn = build_scenario(&ConfigFile::reference(0), 0).unwrap();
    let demand = scn.existing.aggregate();
    let mut group = c.benchmark_group("evaluate");
    for (name, exec) in MODES {
        let model = scn.model().with_exec(exec);
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| model.evaluate(black_box(&scn.initial), black_box(&demand)))
        });
    }
    group.finish();
}

fn plan(c: &mut Criterion) {
    let mut group = c.benchmark_group("plan");
    group.sample_size(10);
    for (name, exec) in MODES {
        let mut cfg = ConfigFile::reference(0);
        cfg.planner.exec = exec;
        let scn = build_scenario(&cfg, 0).unwrap();
        let model = scn.model();
        let spec = estimate_spec(&scn, &model, SpecMethod::CorrSc, &[]).unwrap();
        let demand = PlanningDemand::uncapped(vec![scn.existing.aggregate(), spec.per_pixel]);
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                plan_mode(
                    &scn,
                    &model,
                    black_box(&scn.initial),
                    &demand,
                    PlannerMode::Alg1,
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, evaluate, plan);
criterion_main!(benches);

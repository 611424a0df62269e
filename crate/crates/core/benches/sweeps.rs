use std::f64::consts::PI;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gatebath::bath::BathSpec;
use gatebath::dissipators::PulseSpec;
use gatebath::fidelity::{fidelity_map, fidelity_scan_theta, MapResolution};
use gatebath::evolve::{Protocol, SimConfig};
use gatebath::operators::{devectorize, BlochState, Coupling, ModelSpec};
use gatebath::pulseopt::{optimize, GateWorkspace, OptOptions, PulseShape};
use gatebath::sweeps::{coherence_crossover_sweep, relaxation_delay_sweep, DelayOptions};
use gatebath::Exec;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn sweeps(c: &mut Criterion) {
    let mut g = c.benchmark_group("sweeps");
    g.sample_size(10);
    let b = BathSpec::new(0.001, 1.0, 1.0, 0.0).unwrap();
    let relax = ModelSpec::new(1.0, 0.0, 0.0).unwrap();
    let deph = ModelSpec::new(1.0, 4.0, 0.0).unwrap();
    let taus = [0.1, 0.5, 1.0, 2.0, 5.0, 10.0];
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new("relaxation_delay", name), &exec, |bch, e| {
            bch.iter(|| relaxation_delay_sweep(&relax, &b, &taus, DelayOptions::default(), *e).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("coherence_crossover", name), &exec, |bch, e| {
            bch.iter(|| coherence_crossover_sweep(&deph, &b, PI / 2.0, &taus, &[20.0, 40.0], 0.05, *e).unwrap())
        });
    }
    g.finish();
}

fn fidelity_grids(c: &mut Criterion) {
    let mut g = c.benchmark_group("fidelity");
    g.sample_size(10);
    let rho = devectorize(&BlochState::new(0.02, -0.97, 0.05));
    let m = ModelSpec::new(1.0, 2.0, 0.0).unwrap();
    let b = BathSpec::new(1e-5, 1.0, 1.0, 0.0).unwrap();
    let mut cfg = SimConfig::new(m, b, PulseSpec::square(PI / 2.0, 50.0), Protocol::Pulse, 50.0);
    cfg.dt = 0.05;
    let thetas: Vec<f64> = (0..16).map(|k| k as f64 * PI / 4.0).collect();
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new("map_181x361", name), &exec, |bch, e| {
            bch.iter(|| fidelity_map(&rho, MapResolution::default(), *e).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("theta_scan", name), &exec, |bch, e| {
            bch.iter(|| fidelity_scan_theta(&cfg, &thetas, *e).unwrap())
        });
    }
    g.finish();
}

fn optimizer_restarts(c: &mut Criterion) {
    let mut g = c.benchmark_group("optimizer");
    g.sample_size(10);
    let m = ModelSpec::new(1.0, 0.0, 0.0).unwrap();
    let b = BathSpec::new(1e-5, 0.5, 1.0, 0.0).unwrap();
    let tp = 50.0;
    let ws = GateWorkspace::new(&m, &b, &Coupling::SigmaZ.operator(&m), tp, GateWorkspace::default_steps(&m, &b, tp), Exec::Sequential).unwrap();
    let shape = PulseShape::square(PI / 2.0, tp);
    let opts = OptOptions { budget: 100, restarts: 4, ..OptOptions::default() };
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new("restarts", name), &exec, |bch, e| {
            bch.iter(|| optimize(&ws, &shape, &[0.0; 3], &opts, *e).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, sweeps, fidelity_grids, optimizer_restarts);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use cesc::synth::{compose, synthesize};
use cesc_bench::{fixture, ladder, ladder_symbols};

fn fixtures(c: &mut Criterion) {
    let mut g = c.benchmark_group("synthesize");
    for name in ["ocp_simple_read", "ocp_burst_read", "ahb_transfer", "read_xfer", "req_gnt"] {
        let spec = fixture(name);
        g.bench_with_input(BenchmarkId::from_parameter(name), &spec, |b, s| b.iter(|| synthesize(s).unwrap()));
    }
    g.finish();
}

fn ladders(c: &mut Criterion) {
    let mut g = c.benchmark_group("ladder");
    for ticks in [4, 8, 12, 16] {
        let chart = ladder(ticks, 3);
        let symbols = ladder_symbols(3);
        g.bench_with_input(BenchmarkId::from_parameter(ticks), &chart, |b, ch| b.iter(|| compose(ch, &symbols).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, fixtures, ladders);
criterion_main!(benches);

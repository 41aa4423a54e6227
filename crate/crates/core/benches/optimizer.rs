//! Multi-restart optimization with rayon on and off.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use treesize::approx::{max_overlap_with, OptConfig};
use treesize::par;
use treesize::state::named;
use treesize::tree::catalog_family;

fn restarts(c: &mut Criterion) {
    let target = named::psi4();
    let shape = catalog_family(4, "T8+T8").unwrap()[0].clone();
    let cfg = OptConfig { restarts: 16, max_sweeps: 200, ..OptConfig::default() };
    let mut group = c.benchmark_group("max_overlap_psi4_16_leaves");
    group.sample_size(10);
    for (label, parallel) in [("sequential", false), ("parallel", true)] {
        par::set_parallel(parallel);
        group.bench_function(label, |b| b.iter(|| max_overlap_with(black_box(&target), &shape, &cfg, 0).unwrap()));
    }
    par::set_parallel(true);
    group.finish();
}

criterion_group!(benches, restarts);
criterion_main!(benches);

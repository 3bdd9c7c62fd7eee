use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use dbvp_core::BoundaryCondition;
use dbvp_modes::solver::{family_kernels, ConditionView};
use dbvp_modes::{spectrum, Exec, Geometry, SolverOptions};

fn kernels(c: &mut Criterion) {
    let fam = Geometry::disk(8.0).reduce_to_modes().unwrap();
    let b = BoundaryCondition::gaps(fam.spec.clone().unwrap(), 3.0);
    let view = ConditionView::new(&b);
    let mut group = c.benchmark_group("disk_kernels");
    group.sample_size(10);
    for exec in [Exec::Sequential, Exec::Parallel] {
        let opts = SolverOptions { exec, ..SolverOptions::default() };
        group.bench_function(format!("{exec:?}"), |bch| bch.iter(|| black_box(family_kernels(&fam, &view, &opts).unwrap())));
    }
    group.finish();
}

fn cap_spectrum(c: &mut Criterion) {
    let fam = Geometry::cap(2, 1.0, 4.0).reduce_to_modes().unwrap();
    let b = BoundaryCondition::aps(fam.spec.clone().unwrap());
    let mut group = c.benchmark_group("cap_spectrum");
    group.sample_size(10);
    for exec in [Exec::Sequential, Exec::Parallel] {
        let opts = SolverOptions { exec, check_convergence: false, ..SolverOptions::default() };
        group.bench_function(format!("{exec:?}"), |bch| bch.iter(|| black_box(spectrum(&fam, &b, 5.0, &opts).unwrap())));
    }
    group.finish();
}

criterion_group!(benches, kernels, cap_spectrum);
criterion_main!(benches);

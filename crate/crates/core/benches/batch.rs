use std::hint::black_box;
use std::path::PathBuf;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use curlfree::cli::{self, Problem};
use curlfree::exec::{self, Execution};
use curlfree::saint_venant as sv;
use curlfree::sampling;
use curlfree::subriemann as sr;

fn load(name: &str) -> Problem {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("problems").join(name);
    cli::load(&path).unwrap().0
}

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn horizontal_solves(c: &mut Criterion) {
    let Problem::SubRiemann(s) = load("carnot.json") else { unreachable!() };
    let points = sampling::box_points(&s.domain, 64, 1);
    let mut group = c.benchmark_group("carnot_solve_64");
    for (name, mode) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            exec::set_mode(mode);
            b.iter(|| {
                exec::map(&points, |x| {
                    sr::cv_horizontal_solve(&s.structure, &s.field, &s.base, x, None, 0.0, 1e-10).unwrap().value
                })
            })
        });
    }
    group.finish();
}

fn compatibility_checks(c: &mut Criterion) {
    let Problem::SubRiemann(s) = load("carnot.json") else { unreachable!() };
    let mut comps = s.field.components().to_vec();
    // numeric fallback on every record
    comps[0] = &comps[0] + curlfree::expr::Expr::var(6).sin();
    let field = sr::HorizontalField::new(&s.structure, comps).unwrap();
    let opts = curlfree::report::CheckOptions { samples: 256, ..Default::default() };
    let mut group = c.benchmark_group("carnot_second_order_check");
    group.sample_size(10);
    for (name, mode) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            exec::set_mode(mode);
            b.iter(|| black_box(sr::compat_second(&s.structure, &field, &s.domain, &opts).unwrap()))
        });
    }
    group.finish();
}

fn saint_venant_grid(c: &mut Criterion) {
    let Problem::SaintVenant(p) = load("hyperbolic_sv.json") else { unreachable!() };
    let points = sampling::box_points(&p.domain().shrink(0.9), 256, 2);
    let mut group = c.benchmark_group("sv_reconstruct_256");
    for (name, mode) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            exec::set_mode(mode);
            b.iter(|| black_box(sv::reconstruct_many(&p, &points, 1e-10)))
        });
    }
    group.finish();
}

criterion_group!(benches, horizontal_solves, compatibility_checks, saint_venant_grid);
criterion_main!(benches);

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use svpkit::montecarlo::{run_ensemble, EnsembleConfig};
use svpkit::sde::{simulate, BuiltinModel};
use svpkit::supersolution::generator_apply;
use svpkit::viability::{check_point, CheckOptions};
use svpkit::ImplicitManifold;
use svpkit_bench::{compiled_expression, jump_problem, torus, tube_points, SEED};

fn simulation(c: &mut Criterion) {
    let problem = jump_problem();
    c.bench_function("simulate_jump_path_1000_steps", |b| {
        b.iter(|| simulate(black_box(&problem), 1000, SEED).unwrap())
    });
    let sphere = ImplicitManifold::unit_sphere();
    let config = EnsembleConfig::new(64, 256, SEED);
    c.bench_function("ensemble_64_paths", |b| {
        b.iter(|| run_ensemble(black_box(&problem), &sphere, &config).unwrap())
    });
}

fn geometry(c: &mut Criterion) {
    let t = torus();
    let points = tube_points(&t, 64, 0.1);
    c.bench_function("torus_newton_projection", |b| {
        b.iter(|| {
            for x in &points {
                black_box(t.project(x).unwrap());
            }
        })
    });
    c.bench_function("torus_fd_hessian", |b| {
        b.iter(|| black_box(t.hess_dist2_fd(&points[0]).unwrap()))
    });
}

fn checkers(c: &mut Criterion) {
    let sphere = ImplicitManifold::unit_sphere();
    let problem = jump_problem();
    let on = sphere.sample_manifold(64, SEED).unwrap();
    c.bench_function("check_point_sphere", |b| {
        b.iter(|| {
            for x in &on {
                black_box(
                    check_point(
                        &problem.coefficients,
                        &problem.jumps,
                        &sphere,
                        0.5,
                        x,
                        &CheckOptions::default(),
                    )
                    .unwrap(),
                );
            }
        })
    });
    let coeffs = BuiltinModel::DampedRotation.coefficients(0.0);
    let jumps = BuiltinModel::DampedRotation.jump_measure(0.0);
    let near = tube_points(&sphere, 64, 0.2);
    c.bench_function("generator_sphere_tube", |b| {
        b.iter(|| {
            for x in &near {
                black_box(generator_apply(&coeffs, &jumps, &sphere, 0.5, x).unwrap());
            }
        })
    });
}

fn dsl(c: &mut Criterion) {
    let expr = compiled_expression();
    let x = [0.3, -1.2, 0.8];
    c.bench_function("dsl_compiled_eval", |b| {
        b.iter(|| expr.eval(black_box(0.4), black_box(&x), &[0.5]).unwrap())
    });
}

criterion_group!(benches, simulation, geometry, checkers, dsl);
criterion_main!(benches);

use capdrop_core::alexandrov::{sweep, PlaneFamily, SweepOptions};
use capdrop_core::analytic::{CapillaryCap, CapillaryParams, Side, Target};
use capdrop_core::geom::{close_with_spherical_patch, shapes, PatchSide};
use capdrop_core::solver::{solve, SolveConfig, SolveMode};
use capdrop_core::verify::{check_capillary_cap, VerifyTolerances};
use capdrop_core::{Line, Sphere, Vec3};
use criterion::{criterion_group, criterion_main, Criterion};

fn capillary_solve(c: &mut Criterion) {
    let s = Sphere::unit();
    let gamma = 2.0;
    let init = shapes::perturb_normal(&CapillaryCap::new(s, 0.6, 1.5, Side::Interior).unwrap().mesh(12), 0.01, 1, true);
    let volume = CapillaryCap::new(s, 0.7, gamma, Side::Interior).unwrap().volume();
    let cfg = SolveConfig {
        record_diagnostics: false,
        ..SolveConfig::new(
            SolveMode::Capillary,
            CapillaryParams::constant(gamma, Side::Interior, Target::Volume(volume)),
            s,
        )
    };
    let mut g = c.benchmark_group("solve");
    g.sample_size(10);
    g.bench_function("capillary_12_rings", |b| b.iter(|| solve(&init, &cfg).unwrap()));
    g.finish();
}

fn moving_planes(c: &mut Criterion) {
    let s = Sphere::unit();
    let m = CapillaryCap::new(s, 0.8, 2.0, Side::Interior).unwrap().mesh(16);
    let region = close_with_spherical_patch(&m, &s, PatchSide::Inner).unwrap();
    let gamma: Vec<Vec3> = m.boundary_loops().iter().flat_map(|l| l.positions(&m)).collect();
    let fam = PlaneFamily::rotational(Line { point: Vec3::zeros(), direction: Vec3::y() }, Some(Vec3::x()), 1.6, 3.7)
        .unwrap()
        .with_samples(64)
        .unwrap();
    let opts = SweepOptions::default();
    let mut g = c.benchmark_group("sweep");
    g.sample_size(10);
    g.bench_function("rotational_cap", |b| b.iter(|| sweep(&region, &m, &gamma, &fam, &opts).unwrap()));
    g.finish();
    c.bench_function("verify/capillary_cap", |b| {
        b.iter(|| check_capillary_cap(&m, &s, 2.0, &VerifyTolerances::default()).unwrap())
    });
}

criterion_group!(benches, capillary_solve, moving_planes);
criterion_main!(benches);

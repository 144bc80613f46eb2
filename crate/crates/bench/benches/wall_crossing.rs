use bbgkz_core::series::{evaluate_gamma, EvaluationPoint, TruncationPolicy};
use bbgkz_core::wall::{k_basis, mb_continuation, select_endpoints, transform_at, zero_shifts};
use bbgkz_core::{ContourSpec, Deformation, EssentialMode, Fixture, Provenance, WallSetup};
use criterion::{criterion_group, criterion_main, Criterion};
use num_complex::Complex64;
use std::hint::black_box;

fn setup(f: &Fixture) -> WallSetup {
    WallSetup::new(&f.data, f.plus(), f.minus(), EssentialMode::Containment).unwrap()
}

fn transforms(c: &mut Criterion) {
    for f in [Fixture::conifold(), Fixture::a1()] {
        let s = setup(&f);
        let basis = k_basis(&s.coh_minus).unwrap();
        let d = Deformation::for_circuit(&s.circuit);
        let eps = Complex64::new(1.23e-2, 0.0);
        for prov in [Provenance::FourierMukai, Provenance::AnalyticContinuation] {
            c.bench_function(&format!("transform_at/{}/{prov:?}", f.name), |b| {
                b.iter(|| transform_at(&s, &basis, prov, &d, black_box(eps)).unwrap())
            });
        }
    }
}

fn series(c: &mut Criterion) {
    for f in [Fixture::conifold(), Fixture::a1()] {
        let s = setup(&f);
        let path = select_endpoints(&s.circuit, 0.1, None).unwrap();
        let x = EvaluationPoint::new(path.x_plus.clone()).unwrap();
        let zero = vec![0; f.data.rank];
        for m in [20, 60] {
            c.bench_function(&format!("evaluate_gamma/{}/M={m}", f.name), |b| {
                b.iter(|| {
                    evaluate_gamma(&s.data, &s.plus, &s.coh_plus, &zero, &x, &TruncationPolicy::new(m), None).unwrap()
                })
            });
        }
    }
}

fn contour(c: &mut Criterion) {
    let f = Fixture::a1();
    let s = setup(&f);
    let path = select_endpoints(&s.circuit, 0.1, None).unwrap();
    let x = EvaluationPoint::new(path.x_minus.clone()).unwrap();
    let alg = &s.coh_plus.algebras[0];
    let d = Deformation::for_circuit(&s.circuit);
    let shifts = d.shifts(Complex64::new(1e-2, 0.0));
    let lp = bbgkz_core::toric::canonical_lift(&s.data, &s.coh_plus.sectors[0], &[0, 0]).unwrap().l;
    let spec = ContourSpec::default();
    let mut group = c.benchmark_group("mb_continuation");
    group.sample_size(10);
    group.bench_function("a1/x-", |b| {
        b.iter(|| mb_continuation(alg, &s.circuit, &lp, &x.ln(), &shifts, &spec).unwrap())
    });
    let none = zero_shifts(f.data.n());
    let xp = EvaluationPoint::new(path.x_plus.clone()).unwrap();
    group.bench_function("a1/x+ undeformed", |b| {
        b.iter(|| mb_continuation(alg, &s.circuit, &lp, &xp.ln(), &none, &spec).unwrap())
    });
    group.finish();
}

criterion_group!(benches, transforms, series, contour);
criterion_main!(benches);

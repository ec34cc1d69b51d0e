use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use occmom::oracle::{grid_search_upper_bound, CostModel};
use occmom::pipeline::lp_for_order;
use occmom::poly::p;
use occmom::relaxation::{assemble_sdp_with, AssemblyOptions};
use occmom::sdp::{export_sdpa_string, parse_sdpa, to_standard_form, ClarabelBackend};
use occmom::{lavrentiev_modified, ProblemSpec, SolverSettings};

fn polynomial_arithmetic(c: &mut Criterion) {
    let a = p("(t - x^3)^2*u + 3*z*w - x");
    let b = p("1 + t*x + z^2 - w^2");
    c.bench_function("poly/mul", |bench| bench.iter(|| black_box(&a) * black_box(&b)));
    c.bench_function("poly/pow6", |bench| bench.iter(|| black_box(&b).pow(6)));
    c.bench_function("poly/parse", |bench| bench.iter(|| black_box("(t - x^3)^2*u + 3*z*w - x").parse::<occmom::Polynomial>()));
}

fn assembly(c: &mut Criterion) {
    let lavrentiev = ProblemSpec::Ocp(lavrentiev_modified());
    let mut group = c.benchmark_group("assemble");
    group.sample_size(10);
    for (name, eliminate) in [("full", false), ("reduced", true)] {
        let lp = lp_for_order(&lavrentiev, 4).unwrap();
        let options = AssemblyOptions { eliminate_affine_equalities: eliminate };
        group.bench_with_input(BenchmarkId::new("lavrentiev_order4", name), &lp, |bench, lp| {
            bench.iter(|| assemble_sdp_with(lp, 4, options).unwrap())
        });
    }
    for d in 1..=3 {
        let lp = lp_for_order(&ProblemSpec::Brachistochrone, d).unwrap();
        group.bench_with_input(BenchmarkId::new("brachistochrone", d), &lp, |bench, lp| {
            bench.iter(|| assemble_sdp_with(lp, d, AssemblyOptions::default()).unwrap())
        });
    }
    group.finish();
}

fn solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve");
    group.sample_size(10);
    let settings = SolverSettings::default();
    for d in 1..=2 {
        let lp = lp_for_order(&ProblemSpec::Brachistochrone, d).unwrap();
        let rel = assemble_sdp_with(&lp, d, AssemblyOptions::default()).unwrap();
        group.bench_with_input(BenchmarkId::new("brachistochrone", d), &rel, |bench, rel| {
            bench.iter(|| rel.solve(&ClarabelBackend, &settings).unwrap())
        });
    }
    let lp = lp_for_order(&ProblemSpec::Ocp(lavrentiev_modified()), 4).unwrap();
    let rel = assemble_sdp_with(&lp, 4, AssemblyOptions { eliminate_affine_equalities: true }).unwrap();
    group.bench_function("lavrentiev_order4_reduced", |bench| bench.iter(|| rel.solve(&ClarabelBackend, &settings).unwrap()));
    group.finish();
}

fn sdpa(c: &mut Criterion) {
    let lp = lp_for_order(&ProblemSpec::Ocp(lavrentiev_modified()), 4).unwrap();
    let form = to_standard_form(&assemble_sdp_with(&lp, 4, AssemblyOptions::default()).unwrap());
    let text = export_sdpa_string(&form).unwrap();
    c.bench_function("sdpa/export_lavrentiev_order4", |bench| bench.iter(|| export_sdpa_string(&form).unwrap()));
    c.bench_function("sdpa/parse_lavrentiev_order4", |bench| bench.iter(|| parse_sdpa(text.as_bytes()).unwrap()));
}

fn oracle(c: &mut Criterion) {
    let model = CostModel::from_spec(&ProblemSpec::Brachistochrone);
    let mut group = c.benchmark_group("oracle");
    group.sample_size(10);
    group.bench_function("brachistochrone_32x64", |bench| bench.iter(|| grid_search_upper_bound(&model, 32, 64).unwrap()));
    group.finish();
}

criterion_group!(benches, polynomial_arithmetic, assembly, solve, sdpa, oracle);
criterion_main!(benches);

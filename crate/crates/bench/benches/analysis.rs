use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use refract_bench::corpus;
use refract_core::fixtures;
use refract_core::hierarchy::Hierarchy;
use refract_core::ir::parse_program;
use refract_core::oracle::generate::GenConfig;
use refract_core::pta::analyze_plain;
use refract_core::reflect::{run_stratified, Mode, Options};
use refract_core::report::{analyze, Request};

fn bench_fixtures(c: &mut Criterion) {
    let mut g = c.benchmark_group("fixtures");
    for f in &fixtures::ALL {
        let p = parse_program(f.source).unwrap();
        let h = Hierarchy::new(&p);
        g.bench_function(BenchmarkId::new("ripple", f.name), |b| {
            b.iter(|| run_stratified(&p, &h, f.entry, &Options::new(Mode::Ripple)).unwrap())
        });
    }
    let f = &fixtures::LOGGER;
    let p = parse_program(f.source).unwrap();
    let h = Hierarchy::new(&p);
    let req = Request { source: f.source, entry: f.entry, options: Options::new(Mode::Ripple), taint: None, dump_pts: true };
    g.bench_function("report/logger", |b| b.iter(|| analyze(&p, &h, &req).unwrap().to_json()));
    g.finish();
}

fn bench_corpus(c: &mut Criterion) {
    let reflective = corpus(&GenConfig::with_env(), 50);
    let parsed: Vec<_> = reflective
        .iter()
        .map(|g| {
            let p = parse_program(&g.source).unwrap();
            let h = Hierarchy::new(&p);
            (p, h, g.entry)
        })
        .collect();
    let mut g = c.benchmark_group("generated");
    for mode in Mode::ALL {
        g.bench_function(BenchmarkId::new("reflective-50", mode.as_str()), |b| {
            b.iter(|| {
                for (p, h, entry) in &parsed {
                    run_stratified(p, h, entry, &Options::new(mode)).unwrap();
                }
            })
        });
    }
    let plain = corpus(&GenConfig::plain(), 50);
    g.bench_function("plain-50/solver", |b| {
        b.iter(|| {
            for gen in &plain {
                let p = parse_program(&gen.source).unwrap();
                let h = Hierarchy::new(&p);
                analyze_plain(&p, &h, gen.entry).unwrap();
            }
        })
    });
    g.bench_function("reflective-50/parse", |b| {
        b.iter(|| {
            for gen in &reflective {
                parse_program(&gen.source).unwrap();
            }
        })
    });
    g.finish();
}

criterion_group!(benches, bench_fixtures, bench_corpus);
criterion_main!(benches);

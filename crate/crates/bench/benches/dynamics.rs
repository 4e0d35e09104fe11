use criterion::{criterion_group, criterion_main, Criterion};
use jmate::boettcher::BoettcherChart;
use jmate::curves::{pullback_curve, PolygonalCurve};
use jmate::gluing::build_gluing;
use jmate::portrait::{portrait_of, PERIOD_TOL};
use jmate::render::{attracting_cycles, render, Viewport};
use jmate::verify::Realized;
use jmate::{config::Config, RationalMap, C64};
use std::hint::black_box;

fn cubic(a: f64) -> RationalMap {
    RationalMap::polynomial(vec![C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(a, 0.0)]).unwrap()
}

fn boettcher(c: &mut Criterion) {
    let chart = BoettcherChart::new(&cubic(4.0 / 9.0), C64::new(0.0, 0.0), 2).unwrap();
    let z = chart.ray_point(0.3, 1e-2).unwrap();
    c.bench_function("boettcher value", |b| b.iter(|| chart.value(jmate::Point::Finite(black_box(z))).unwrap()));
    c.bench_function("boettcher inverse", |b| b.iter(|| chart.inverse(black_box(C64::from_polar(0.9, 1.0))).unwrap()));
    c.bench_function("gluing 256", |b| b.iter(|| build_gluing(&chart, &chart, 1, 256, 1e-4).unwrap()));
}

fn realize(c: &mut Criterion) {
    let cfg = Config::builtin("z2f").unwrap();
    let mut g = c.benchmark_group("realize");
    g.sample_size(10);
    g.bench_function("z2 with f", |b| b.iter(|| Realized::from_config(&cfg).unwrap()));
    g.finish();
}

fn raster(c: &mut Criterion) {
    let map = cubic(4.0 / 9.0);
    let cycles = attracting_cycles(&map, &portrait_of(&map, 64, PERIOD_TOL).unwrap());
    let vp = Viewport::new(C64::new(-0.6, 0.0), 4.0, (128, 128)).unwrap();
    let mut g = c.benchmark_group("render");
    g.sample_size(20);
    g.bench_function("f 128x128", |b| b.iter(|| render(&map, &cycles, &vp, 300)));
    g.finish();
}

fn pullback(c: &mut Criterion) {
    let curve = PolygonalCurve::new((0..256).map(|k| C64::from_polar(0.3, std::f64::consts::TAU * k as f64 / 256.0) + 1.0).collect()).unwrap();
    let map = cubic(4.0 / 9.0);
    c.bench_function("pullback 256", |b| b.iter(|| pullback_curve(&map, black_box(&curve)).unwrap()));
}

criterion_group!(benches, boettcher, realize, raster, pullback);
criterion_main!(benches);

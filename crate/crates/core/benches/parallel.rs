use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use nearme_core::geo::GeoPoint;
use nearme_core::region::load_counties;
use nearme_core::routing::{compute_isochrone, load_graph, nearest_node, IsochroneConfig};
use nearme_core::synthetic::{jittered_counties, Lattice, DEMO_EDGE_SECONDS, US_BOUNDS};
use nearme_core::Exec;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn counties(c: &mut Criterion) {
    let set = load_counties(jittered_counties(62, 50, US_BOUNDS, 2020).as_bytes()).unwrap();
    let lat = Lattice::square(40, (-97.75, 30.25), 0.05, DEMO_EDGE_SECONDS);
    let g = load_graph(lat.nodes_csv().as_bytes(), lat.edges_csv().as_bytes()).unwrap();
    let cfg = IsochroneConfig { budget: 4.0 * 3600.0, ..Default::default() };
    let iso = compute_isochrone(&g, &lat.point(0, 0), &cfg, Exec::Sequential).unwrap().geometry;

    let mut group = c.benchmark_group("counties_intersecting");
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| set.counties_intersecting(black_box(&iso), exec))
        });
    }
    group.finish();
}

fn snapping(c: &mut Criterion) {
    let lat = Lattice::square(150, (-97.75, 30.25), 0.002, DEMO_EDGE_SECONDS);
    let g = load_graph(lat.nodes_csv().as_bytes(), lat.edges_csv().as_bytes()).unwrap();
    let p = GeoPoint::new(-97.6012, 30.3377).unwrap();

    let mut group = c.benchmark_group("nearest_node");
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| nearest_node(&g, black_box(&p), 1e6, exec).unwrap())
        });
    }
    group.finish();
}

fn isochrone(c: &mut Criterion) {
    let lat = Lattice::square(60, (-97.75, 30.25), 0.005, DEMO_EDGE_SECONDS);
    let g = load_graph(lat.nodes_csv().as_bytes(), lat.edges_csv().as_bytes()).unwrap();
    let cfg = IsochroneConfig { budget: 30.0 * DEMO_EDGE_SECONDS, ..Default::default() };

    let mut group = c.benchmark_group("compute_isochrone");
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| compute_isochrone(&g, &lat.point(0, 0), black_box(&cfg), exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, counties, snapping, isochrone);
criterion_main!(benches);

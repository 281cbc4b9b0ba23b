mod common;

use common::{enumerate_arrivals, random_graph};
use nearme_core::geo::{bbox_of, great_circle_m, point_in_multipolygon, GeoPoint, METERS_PER_DEGREE};
use nearme_core::routing::{
    build_isochrone, compute_isochrone, load_graph, nearest_node, reachable_set, IsochroneConfig, RoadGraph,
    RoutingError,
};
use nearme_core::synthetic::{diamond_size, Lattice, DEMO_CENTER, DEMO_EDGE_SECONDS, DEMO_SPACING};
use nearme_core::Exec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn dijkstra_matches_path_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..600 {
        let (n, arcs, g) = random_graph(&mut rng);
        let src = rng.gen_range(0..n);
        let budget = if rng.gen_bool(0.2) { 1e9 } else { rng.gen_range(0.0..3000.0) };
        let expected = enumerate_arrivals(n, &arcs, src, budget);
        let got = reachable_set(&g, src as u64 + 1, budget).unwrap();
        for (i, exp) in expected.iter().enumerate() {
            assert_eq!(got.arrivals.get(&(i as u64 + 1)).copied(), *exp, "trial {trial}, node {i}");
        }
        assert_eq!(got.arrivals.len(), expected.iter().flatten().count());
    }
}

#[test]
fn lattice_closed_form() {
    let lat = Lattice::demo();
    let g = load_graph(lat.nodes_csv().as_bytes(), lat.edges_csv().as_bytes()).unwrap();
    assert_eq!(g.node_count(), 441);
    let iso = compute_isochrone(&g, &lat.point(0, 0), &IsochroneConfig::default(), Exec::Parallel).unwrap();
    assert_eq!(iso.reach.arrivals.len(), diamond_size(6));
    for &(dx, dy) in lat.offsets() {
        let r = dx.abs() + dy.abs();
        let arrival = iso.reach.arrivals.get(&lat.node_id(dx, dy)).copied();
        let inside = point_in_multipolygon(&lat.point(dx, dy), &iso.geometry);
        if r <= 6 {
            assert_eq!(arrival, Some(600.0 * r as f64), "({dx},{dy})");
            assert!(inside, "({dx},{dy}) outside");
        } else {
            assert_eq!(arrival, None);
        }
        if r >= 8 {
            assert!(!inside, "({dx},{dy}) inside");
        }
    }
}

#[test]
fn diamond_fixture_counts_and_containment() {
    let d = Lattice::diamond(4, DEMO_CENTER, DEMO_SPACING, DEMO_EDGE_SECONDS);
    let g = load_graph(d.nodes_csv().as_bytes(), d.edges_csv().as_bytes()).unwrap();
    assert_eq!(g.node_count(), 41);
    assert_eq!(g.node_count(), d.node_count());
    assert_eq!(g.arc_count(), d.arc_count());
    for budget in [0.0, 300.0, 900.0, 1500.0, 2400.0, 5000.0] {
        let r = reachable_set(&g, d.node_id(0, 0), budget).unwrap();
        for dilation in [0, 1] {
            let cfg = IsochroneConfig {
                budget,
                dilation,
                ..Default::default()
            };
            let iso = build_isochrone(&r, &g, &cfg, Exec::Sequential).unwrap();
            for id in r.arrivals.keys() {
                assert!(point_in_multipolygon(&g.point(*id).unwrap(), &iso));
            }
            for p in &r.frontier_points {
                assert!(point_in_multipolygon(p, &iso));
            }
        }
    }
}

#[test]
fn nearest_node_matches_scan() {
    let d = Lattice::diamond(4, DEMO_CENTER, DEMO_SPACING, DEMO_EDGE_SECONDS);
    let g = load_graph(d.nodes_csv().as_bytes(), d.edges_csv().as_bytes()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..500 {
        let p = GeoPoint::new(rng.gen_range(-98.0..-97.5), rng.gen_range(30.0..30.5)).unwrap();
        let (mut best_id, mut best_d) = (u64::MAX, f64::INFINITY);
        for &id in g.node_ids() {
            let dist = great_circle_m(&p, &g.point(id).unwrap());
            if dist < best_d || (dist == best_d && id < best_id) {
                (best_id, best_d) = (id, dist);
            }
        }
        for exec in [Exec::Sequential, Exec::Parallel] {
            let got = nearest_node(&g, &p, 1e7, exec).unwrap();
            assert_eq!((got.id, got.distance_m), (best_id, best_d));
        }
    }
    let at = nearest_node(&g, &d.point(1, 2), 0.0, Exec::Parallel).unwrap();
    assert_eq!((at.id, at.distance_m), (d.node_id(1, 2), 0.0));
}

#[test]
fn ties_go_to_smallest_id() {
    let p = GeoPoint::new(-97.0, 30.0).unwrap();
    let g = RoadGraph::from_parts(vec![(9, p), (3, p), (5, p)], []).unwrap();
    assert_eq!(nearest_node(&g, &p, 1.0, Exec::Parallel).unwrap().id, 3);
}

#[test]
fn zero_budget_and_off_network() {
    let lat = Lattice::demo();
    let g = load_graph(lat.nodes_csv().as_bytes(), lat.edges_csv().as_bytes()).unwrap();
    let cfg = IsochroneConfig {
        budget: 0.0,
        dilation: 0,
        ..Default::default()
    };
    let iso = compute_isochrone(&g, &lat.point(0, 0), &cfg, Exec::Sequential).unwrap();
    assert_eq!(iso.geometry.polygons().len(), 1);
    let b = bbox_of(&iso.geometry);
    assert!(((b.max_lat() - b.min_lat()) * METERS_PER_DEGREE - 1000.0).abs() < 1e-6);
    assert!(point_in_multipolygon(&lat.point(0, 0), &iso.geometry));

    // 10 km north of the top row
    let top = lat.point(0, 10);
    let off = GeoPoint::new(top.lon(), top.lat() + 10_000.0 / METERS_PER_DEGREE).unwrap();
    let err = compute_isochrone(&g, &off, &IsochroneConfig::default(), Exec::Parallel).unwrap_err();
    assert!(matches!(err, RoutingError::OriginOffNetwork { distance_m, .. } if (distance_m - 10_000.0).abs() < 1.0));
}

//! Drive-time reachability over a road graph and the isochrone polygon built
//! from it.

mod contour;
mod graph;
mod isochrone;
mod reach;

use thiserror::Error;

pub use graph::{load_graph, nearest_node, Arc, Edge, NearestNode, NodeId, RoadGraph};
pub use isochrone::{build_isochrone, compute_isochrone, Isochrone, IsochroneConfig, IsochroneMode};
pub use reach::{reachable_set, ReachResult};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RoutingError {
    #[error("{file} line {line}: {reason}")]
    MalformedRow {
        file: &'static str,
        line: usize,
        reason: String,
    },
    #[error("edges line {line}: references unknown node {node}")]
    DanglingEdge { line: usize, node: NodeId },
    #[error("duplicate node id {0}")]
    DuplicateNode(NodeId),
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("nearest road node is {distance_m:.0} m away (snap radius {snap_radius_m:.0} m)")]
    OriginOffNetwork { distance_m: f64, snap_radius_m: f64 },
    #[error("unknown source node {0}")]
    UnknownSource(NodeId),
    #[error("invalid isochrone config: {0}")]
    InvalidConfig(String),
}

#[cfg(test)]
pub(crate) use isochrone::CellGrid;
#[cfg(test)]
pub(crate) use isochrone::occupied_cells;

#[cfg(test)]
mod properties {
    use super::*;
    use crate::geo::{point_in_multipolygon, GeoPoint};
    use crate::Exec;
    use proptest::prelude::*;

    fn graph() -> impl Strategy<Value = RoadGraph> {
        (2usize..14).prop_flat_map(|n| {
            let nodes = prop::collection::vec((-97.9f64..-97.6, 30.1f64..30.4), n);
            let edges = prop::collection::vec((0..n, 0..n, 30.0f64..900.0, any::<bool>()), 1..3 * n);
            (nodes, edges).prop_map(|(nodes, edges)| {
                let nodes = nodes
                    .into_iter()
                    .enumerate()
                    .map(|(i, (lon, lat))| (i as NodeId + 1, GeoPoint::new(lon, lat).unwrap()))
                    .collect();
                let edges = edges
                    .into_iter()
                    .filter(|(a, b, _, _)| a != b)
                    .map(|(a, b, seconds, oneway)| Edge {
                        from: a as NodeId + 1,
                        to: b as NodeId + 1,
                        seconds,
                        oneway,
                    });
                RoadGraph::from_parts(nodes, edges).unwrap()
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn budgets_are_monotone(g in graph(), b1 in 0.0f64..2000.0, extra in 0.0f64..2000.0, cell in 300.0f64..3000.0) {
            let b2 = b1 + extra;
            let r1 = reachable_set(&g, 1, b1).unwrap();
            let r2 = reachable_set(&g, 1, b2).unwrap();
            prop_assert!(r1.arrivals.keys().all(|id| r2.reached(*id)));
            let grid = CellGrid::new(&g.point(1).unwrap(), cell);
            let c1 = occupied_cells(&r1, &g, &grid, Exec::Sequential);
            let c2 = occupied_cells(&r2, &g, &grid, Exec::Sequential);
            prop_assert!(c1.is_subset(&c2), "{:?}", c1.difference(&c2).collect::<Vec<_>>());
        }

        #[test]
        fn reached_points_are_contained(g in graph(), budget in 0.0f64..3000.0, dilation in 0u32..3, cell in 200.0f64..3000.0) {
            let r = reachable_set(&g, 1, budget).unwrap();
            let cfg = IsochroneConfig { budget, cell_size: cell, dilation, ..Default::default() };
            let iso = build_isochrone(&r, &g, &cfg, Exec::Sequential).unwrap();
            for id in r.arrivals.keys() {
                prop_assert!(point_in_multipolygon(&g.point(*id).unwrap(), &iso));
            }
            for p in &r.frontier_points {
                prop_assert!(point_in_multipolygon(p, &iso));
            }
        }

        #[test]
        fn output_is_deterministic(g in graph(), budget in 0.0f64..3000.0, hull in any::<bool>()) {
            let mode = if hull { IsochroneMode::ConvexHull } else { IsochroneMode::ConcaveGrid };
            let cfg = IsochroneConfig { budget, mode, ..Default::default() };
            let r = reachable_set(&g, 1, budget).unwrap();
            let a = build_isochrone(&r, &g, &cfg, Exec::Sequential).unwrap();
            let b = build_isochrone(&r, &g, &cfg, Exec::Parallel).unwrap();
            let c = build_isochrone(&reachable_set(&g, 1, budget).unwrap(), &g, &cfg, Exec::Parallel).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(&a, &c);
        }
    }
}

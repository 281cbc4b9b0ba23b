use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use crate::geo::GeoPoint;

use super::graph::{NodeId, RoadGraph};
use super::RoutingError;

/// Output of a time-bounded shortest-path search.
#[derive(Debug, Clone, PartialEq)]
pub struct ReachResult {
    pub origin_node: NodeId,
    pub budget: f64,
    /// Arrival seconds for every node reached within the budget.
    pub arrivals: BTreeMap<NodeId, f64>,
    /// Where the budget runs out on arcs leading to unreached nodes.
    pub frontier_points: Vec<GeoPoint>,
}

impl ReachResult {
    pub fn reached(&self, id: NodeId) -> bool {
        self.arrivals.contains_key(&id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Seconds(f64);

impl Eq for Seconds {}

impl PartialOrd for Seconds {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Seconds {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Dijkstra from `source`, settling only nodes whose arrival is within `budget`.
pub(crate) fn arrival_times(g: &RoadGraph, source: usize, budget: f64) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; g.node_count()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Reverse((Seconds(0.0), source)));
    while let Some(Reverse((Seconds(d), u))) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for arc in g.arcs(u) {
            let nd = d + arc.seconds;
            if nd <= budget && nd < dist[arc.target] {
                dist[arc.target] = nd;
                heap.push(Reverse((Seconds(nd), arc.target)));
            }
        }
    }
    dist
}

pub fn reachable_set(g: &RoadGraph, source: NodeId, budget: f64) -> Result<ReachResult, RoutingError> {
    let src = g.index_of(source).ok_or(RoutingError::UnknownSource(source))?;
    if !(budget >= 0.0 && budget.is_finite()) {
        return Err(RoutingError::InvalidConfig(format!("budget must be >= 0, got {budget}")));
    }
    let dist = arrival_times(g, src, budget);

    let mut arrivals = BTreeMap::new();
    let mut frontier_points = Vec::new();
    for (u, &du) in dist.iter().enumerate() {
        if !du.is_finite() {
            continue;
        }
        arrivals.insert(g.id_at(u), du);
        for arc in g.arcs(u) {
            if budget < du + arc.seconds && !dist[arc.target].is_finite() {
                let t = (budget - du) / arc.seconds;
                frontier_points.push(g.point_at(u).lerp(&g.point_at(arc.target), t));
            }
        }
    }
    Ok(ReachResult {
        origin_node: source,
        budget,
        arrivals,
        frontier_points,
    })
}

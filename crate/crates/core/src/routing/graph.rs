use std::collections::HashMap;
use std::io::Read;

use crate::exec::{self, Exec};
use crate::geo::{great_circle_m, GeoPoint};

use super::RoutingError;

pub type NodeId = u64;

/// One directed arc out of a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub target: usize,
    pub seconds: f64,
}

/// An undirected or one-way road segment as it appears in the edges file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    pub seconds: f64,
    pub oneway: bool,
}

/// Road network with travel-time weights. Nodes are stored in ascending id
/// order so a dense index comparison is also an id comparison.
#[derive(Debug, Clone)]
pub struct RoadGraph {
    ids: Vec<NodeId>,
    points: Vec<GeoPoint>,
    index: HashMap<NodeId, usize>,
    adjacency: Vec<Vec<Arc>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearestNode {
    pub id: NodeId,
    pub distance_m: f64,
}

impl RoadGraph {
    pub fn from_parts(
        mut nodes: Vec<(NodeId, GeoPoint)>,
        edges: impl IntoIterator<Item = Edge>,
    ) -> Result<Self, RoutingError> {
        if nodes.is_empty() {
            return Err(RoutingError::EmptyGraph);
        }
        nodes.sort_by_key(|(id, _)| *id);
        if let Some(w) = nodes.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(RoutingError::DuplicateNode(w[0].0));
        }
        let (ids, points): (Vec<_>, Vec<_>) = nodes.into_iter().unzip();
        let index: HashMap<NodeId, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
        let mut adjacency = vec![Vec::new(); ids.len()];
        for (n, e) in edges.into_iter().enumerate() {
            let lookup = |id: NodeId| {
                index.get(&id).copied().ok_or(RoutingError::DanglingEdge {
                    line: n + 2,
                    node: id,
                })
            };
            let (from, to) = (lookup(e.from)?, lookup(e.to)?);
            if !(e.seconds > 0.0 && e.seconds.is_finite()) {
                return Err(RoutingError::MalformedRow {
                    file: "edges",
                    line: n + 2,
                    reason: format!("seconds must be positive, got {}", e.seconds),
                });
            }
            adjacency[from].push(Arc {
                target: to,
                seconds: e.seconds,
            });
            if !e.oneway {
                adjacency[to].push(Arc {
                    target: from,
                    seconds: e.seconds,
                });
            }
        }
        Ok(Self {
            ids,
            points,
            index,
            adjacency,
        })
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn arc_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum()
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.index.contains_key(&id)
    }

    pub fn point(&self, id: NodeId) -> Option<GeoPoint> {
        self.index.get(&id).map(|&i| self.points[i])
    }

    pub(crate) fn index_of(&self, id: NodeId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub(crate) fn id_at(&self, idx: usize) -> NodeId {
        self.ids[idx]
    }

    pub(crate) fn point_at(&self, idx: usize) -> GeoPoint {
        self.points[idx]
    }

    pub(crate) fn arcs(&self, idx: usize) -> &[Arc] {
        &self.adjacency[idx]
    }

    pub fn node_ids(&self) -> &[NodeId] {
        &self.ids
    }
}

fn check_header(
    rdr: &mut csv::Reader<impl Read>,
    file: &'static str,
    expected: &[&str],
) -> Result<(), RoutingError> {
    let header = rdr.headers().map_err(|e| RoutingError::MalformedRow {
        file,
        line: 1,
        reason: e.to_string(),
    })?;
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    if got != expected {
        return Err(RoutingError::MalformedRow {
            file,
            line: 1,
            reason: format!("expected header `{}`, got `{}`", expected.join(","), got.join(",")),
        });
    }
    Ok(())
}

fn field<T: std::str::FromStr>(
    rec: &csv::StringRecord,
    i: usize,
    name: &str,
    file: &'static str,
    line: usize,
) -> Result<T, RoutingError> {
    let raw = rec.get(i).map(str::trim).unwrap_or("");
    raw.parse().map_err(|_| RoutingError::MalformedRow {
        file,
        line,
        reason: format!("bad {name} `{raw}`"),
    })
}

fn reader(src: impl Read) -> csv::Reader<impl Read> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(src)
}

/// Reads the nodes (`id,lat,lon`) and edges (`from,to,seconds,oneway`) CSVs.
pub fn load_graph(nodes_src: impl Read, edges_src: impl Read) -> Result<RoadGraph, RoutingError> {
    let mut rdr = reader(nodes_src);
    check_header(&mut rdr, "nodes", &["id", "lat", "lon"])?;
    let mut nodes = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| RoutingError::MalformedRow {
            file: "nodes",
            line: e.position().map_or(0, |p| p.line() as usize),
            reason: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != 3 {
            return Err(RoutingError::MalformedRow {
                file: "nodes",
                line,
                reason: format!("expected 3 fields, got {}", rec.len()),
            });
        }
        let id: NodeId = field(&rec, 0, "id", "nodes", line)?;
        let lat: f64 = field(&rec, 1, "lat", "nodes", line)?;
        let lon: f64 = field(&rec, 2, "lon", "nodes", line)?;
        let p = GeoPoint::new(lon, lat).map_err(|e| RoutingError::MalformedRow {
            file: "nodes",
            line,
            reason: e.to_string(),
        })?;
        nodes.push((id, p));
    }

    let mut rdr = reader(edges_src);
    check_header(&mut rdr, "edges", &["from", "to", "seconds", "oneway"])?;
    let mut edges = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| RoutingError::MalformedRow {
            file: "edges",
            line: e.position().map_or(0, |p| p.line() as usize),
            reason: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != 4 {
            return Err(RoutingError::MalformedRow {
                file: "edges",
                line,
                reason: format!("expected 4 fields, got {}", rec.len()),
            });
        }
        let from: NodeId = field(&rec, 0, "from", "edges", line)?;
        let to: NodeId = field(&rec, 1, "to", "edges", line)?;
        let seconds: f64 = field(&rec, 2, "seconds", "edges", line)?;
        let oneway = match rec.get(3).map(str::trim) {
            Some("0") => false,
            Some("1") => true,
            other => {
                return Err(RoutingError::MalformedRow {
                    file: "edges",
                    line,
                    reason: format!("oneway must be 0 or 1, got `{}`", other.unwrap_or("")),
                })
            }
        };
        if !(seconds > 0.0 && seconds.is_finite()) {
            return Err(RoutingError::MalformedRow {
                file: "edges",
                line,
                reason: format!("seconds must be positive, got `{seconds}`"),
            });
        }
        edges.push((line, Edge { from, to, seconds, oneway }));
    }

    let known: std::collections::HashSet<NodeId> = nodes.iter().map(|(id, _)| *id).collect();
    if let Some((line, e)) = edges
        .iter()
        .find(|(_, e)| !known.contains(&e.from) || !known.contains(&e.to))
    {
        let node = if known.contains(&e.from) { e.to } else { e.from };
        return Err(RoutingError::DanglingEdge { line: *line, node });
    }
    RoadGraph::from_parts(nodes, edges.into_iter().map(|(_, e)| e))
}

/// Closest node by great-circle distance; ties go to the smallest id.
pub fn nearest_node(
    g: &RoadGraph,
    p: &GeoPoint,
    snap_radius_m: f64,
    exec: Exec,
) -> Result<NearestNode, RoutingError> {
    let best = exec::min_by_key(&g.points, exec, |q| great_circle_m(p, q))
        .ok_or(RoutingError::EmptyGraph)?;
    let distance_m = great_circle_m(p, &g.points[best]);
    if distance_m > snap_radius_m {
        return Err(RoutingError::OriginOffNetwork {
            distance_m,
            snap_radius_m,
        });
    }
    Ok(NearestNode {
        id: g.ids[best],
        distance_m,
    })
}

//! Test-side oracles, written independently of the library: exact integer
//! geometry, exhaustive path enumeration and naive windowed sums. Also
//! random generators that feed both sides.
#![allow(dead_code)]

use nearme_core::geo::{GeoPoint, MultiPolygon, Polygon, Ring};
use nearme_core::routing::{Edge, RoadGraph};
use rand::Rng;

pub type IPt = (i64, i64);

/// Integer polygons are mapped to degrees as `BASE + k / SCALE`, exact in f64.
pub const SCALE: f64 = 8.0;
pub const BASE: (f64, f64) = (-100.0, 30.0);

pub fn to_geo((x, y): IPt) -> GeoPoint {
    GeoPoint::new(BASE.0 + x as f64 / SCALE, BASE.1 + y as f64 / SCALE).unwrap()
}

/// Exterior ring plus holes; rings are open (no repeated closing vertex).
#[derive(Debug, Clone)]
pub struct IPoly {
    pub exterior: Vec<IPt>,
    pub holes: Vec<Vec<IPt>>,
}

impl IPoly {
    pub fn rings(&self) -> impl Iterator<Item = &Vec<IPt>> {
        std::iter::once(&self.exterior).chain(&self.holes)
    }

    pub fn to_polygon(&self) -> Option<Polygon> {
        let ring = |r: &Vec<IPt>| {
            let mut pts: Vec<GeoPoint> = r.iter().map(|&p| to_geo(p)).collect();
            pts.push(pts[0]);
            Ring::new(pts).ok()
        };
        Polygon::new(ring(&self.exterior)?, self.holes.iter().map(ring).collect::<Option<_>>()?).ok()
    }
}

pub fn to_multi(polys: &[IPoly]) -> Option<MultiPolygon> {
    MultiPolygon::new(polys.iter().map(IPoly::to_polygon).collect::<Option<_>>()?).ok()
}

fn cross(o: IPt, a: IPt, b: IPt) -> i128 {
    (a.0 - o.0) as i128 * (b.1 - o.1) as i128 - (a.1 - o.1) as i128 * (b.0 - o.0) as i128
}

pub fn on_segment(p: IPt, a: IPt, b: IPt) -> bool {
    cross(a, b, p) == 0 && p.0 >= a.0.min(b.0) && p.0 <= a.0.max(b.0) && p.1 >= a.1.min(b.1) && p.1 <= a.1.max(b.1)
}

fn edges(ring: &[IPt]) -> impl Iterator<Item = (IPt, IPt)> + '_ {
    (0..ring.len()).map(move |i| (ring[i], ring[(i + 1) % ring.len()]))
}

#[derive(Debug, PartialEq, Eq)]
pub enum Loc {
    In,
    On,
    Out,
}

/// Crossing number with a half-open rule on y, counting crossings strictly
/// right of the point.
pub fn locate(p: IPt, ring: &[IPt]) -> Loc {
    let mut crossings = 0;
    for (a, b) in edges(ring) {
        if on_segment(p, a, b) {
            return Loc::On;
        }
        let (lo, hi) = if a.1 < b.1 { (a, b) } else { (b, a) };
        if lo.1 <= p.1 && p.1 < hi.1 && cross(lo, hi, p) > 0 {
            crossings += 1;
        }
    }
    if crossings % 2 == 1 {
        Loc::In
    } else {
        Loc::Out
    }
}

/// Inside the exterior (edges included) and not strictly inside any hole.
pub fn point_in_ipoly(p: IPt, poly: &IPoly) -> bool {
    match locate(p, &poly.exterior) {
        Loc::Out => false,
        Loc::On => true,
        Loc::In => poly.holes.iter().all(|h| locate(p, h) != Loc::In),
    }
}

fn sign(v: i128) -> i8 {
    v.signum() as i8
}

pub fn segments_touch(a1: IPt, a2: IPt, b1: IPt, b2: IPt) -> bool {
    let d1 = sign(cross(b1, b2, a1));
    let d2 = sign(cross(b1, b2, a2));
    let d3 = sign(cross(a1, a2, b1));
    let d4 = sign(cross(a1, a2, b2));
    if d1 * d2 < 0 && d3 * d4 < 0 {
        return true;
    }
    on_segment(a1, b1, b2) || on_segment(a2, b1, b2) || on_segment(b1, a1, a2) || on_segment(b2, a1, a2)
}

/// All vertices against all polygons, all edges against all edges; no pruning.
pub fn ipolys_intersect(a: &[IPoly], b: &[IPoly]) -> bool {
    let vertex_hit = |xs: &[IPoly], ys: &[IPoly]| {
        xs.iter()
            .flat_map(|p| p.rings().flatten())
            .any(|&v| ys.iter().any(|q| point_in_ipoly(v, q)))
    };
    if vertex_hit(a, b) || vertex_hit(b, a) {
        return true;
    }
    let ea: Vec<_> = a.iter().flat_map(|p| p.rings().flat_map(|r| edges(r).collect::<Vec<_>>())).collect();
    let eb: Vec<_> = b.iter().flat_map(|p| p.rings().flat_map(|r| edges(r).collect::<Vec<_>>())).collect();
    ea.iter().any(|&(a1, a2)| eb.iter().any(|&(b1, b2)| segments_touch(a1, a2, b1, b2)))
}

/// Star-shaped ring around `c` with radii in `r`, counter-clockwise, distinct consecutive vertices.
pub fn star(rng: &mut impl Rng, c: IPt, r: (f64, f64), max_vertices: usize) -> Vec<IPt> {
    loop {
        let k = rng.gen_range(3..=max_vertices);
        let mut angles: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
        angles.sort_by(f64::total_cmp);
        let mut pts: Vec<IPt> = angles
            .iter()
            .map(|a| {
                let rad = rng.gen_range(r.0..=r.1);
                (c.0 + (rad * a.cos()).round() as i64, c.1 + (rad * a.sin()).round() as i64)
            })
            .collect();
        pts.dedup();
        if pts.len() > 1 && pts.first() == pts.last() {
            pts.pop();
        }
        if pts.len() >= 3 {
            return pts;
        }
    }
}

/// Random polygon within roughly `span` units, sometimes with one hole.
pub fn random_ipoly(rng: &mut impl Rng, span: i64) -> IPoly {
    let c = (rng.gen_range(0..span), rng.gen_range(0..span));
    let r = rng.gen_range(3.0..(span as f64 / 2.0).max(4.0));
    let exterior = star(rng, c, (r / 2.0, r), 12);
    let holes = if rng.gen_bool(0.3) && r >= 6.0 {
        vec![star(rng, c, (1.0, r / 5.0), 5).into_iter().rev().collect()]
    } else {
        vec![]
    };
    IPoly { exterior, holes }
}

/// Convex polygon: integer hull of random points.
pub fn random_convex(rng: &mut impl Rng, span: i64) -> IPoly {
    loop {
        let c = (rng.gen_range(0..span), rng.gen_range(0..span));
        let r = rng.gen_range(2..span / 2 + 3);
        let pts: Vec<IPt> = (0..rng.gen_range(3..12))
            .map(|_| (c.0 + rng.gen_range(-r..=r), c.1 + rng.gen_range(-r..=r)))
            .collect();
        let hull = int_hull(pts);
        if hull.len() >= 3 {
            return IPoly { exterior: hull, holes: vec![] };
        }
    }
}

fn int_hull(mut pts: Vec<IPt>) -> Vec<IPt> {
    pts.sort();
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<IPt> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<IPt> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Directed arc list `(from, to, seconds)` over nodes `0..n`.
pub type ArcList = Vec<(usize, usize, f64)>;

/// Shortest arrival to every node over all simple paths from `src`, keeping
/// only totals within `budget`. Costs accumulate from the source outward.
pub fn enumerate_arrivals(n: usize, arcs: &ArcList, src: usize, budget: f64) -> Vec<Option<f64>> {
    fn dfs(u: usize, cost: f64, arcs: &ArcList, budget: f64, seen: &mut Vec<bool>, best: &mut Vec<Option<f64>>) {
        if best[u].is_none_or(|b| cost < b) {
            best[u] = Some(cost);
        }
        for &(a, b, w) in arcs {
            if a == u && !seen[b] && cost + w <= budget {
                seen[b] = true;
                dfs(b, cost + w, arcs, budget, seen, best);
                seen[b] = false;
            }
        }
    }
    let mut seen = vec![false; n];
    let mut best = vec![None; n];
    seen[src] = true;
    dfs(src, 0.0, arcs, budget, &mut seen, &mut best);
    best
}

/// `r[i] = Σ daily[max(0, i - w + 1) ..= i]`, recomputed per index.
pub fn naive_rolling(daily: &[i64], w: usize) -> Vec<i64> {
    (0..daily.len())
        .map(|i| daily[(i + 1).saturating_sub(w)..=i].iter().sum())
        .collect()
}

/// A random graph of 1 to 8 nodes with parallel and one-way edges, plus the
/// same arcs as a plain list for [`enumerate_arrivals`].
pub fn random_graph(rng: &mut impl Rng) -> (usize, ArcList, RoadGraph) {
    let n = rng.gen_range(1..=8);
    let nodes: Vec<_> = (0..n)
        .map(|i| (i as u64 + 1, GeoPoint::new(-97.0 + 0.01 * i as f64, 30.0).unwrap()))
        .collect();
    let mut edges = Vec::new();
    let mut arcs = Vec::new();
    for a in 0..n {
        for b in 0..n {
            // a < b: maybe one edge, maybe two parallel ones
            if a < b {
                for _ in 0..rng.gen_range(0..=2) {
                    if rng.gen_bool(0.5) {
                        continue;
                    }
                    let seconds = rng.gen_range(1.0..1200.0);
                    let oneway = rng.gen_bool(0.3);
                    let (from, to) = if rng.gen_bool(0.5) { (a, b) } else { (b, a) };
                    arcs.push((from, to, seconds));
                    if !oneway {
                        arcs.push((to, from, seconds));
                    }
                    edges.push(Edge {
                        from: from as u64 + 1,
                        to: to as u64 + 1,
                        seconds,
                        oneway,
                    });
                }
            }
        }
    }
    (n, arcs, RoadGraph::from_parts(nodes, edges).unwrap())
}

/// A star-shaped blob of lon/lat radius up to `r` degrees.
pub fn blob(rng: &mut impl Rng, c: (f64, f64), r: f64) -> MultiPolygon {
    let k = rng.gen_range(5..24);
    let mut coords: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            let a = i as f64 / k as f64 * std::f64::consts::TAU;
            let rad = rng.gen_range(r / 3.0..r);
            vec![c.0 + rad * a.cos(), c.1 + rad * a.sin()]
        })
        .collect();
    coords.push(coords[0].clone());
    MultiPolygon::from_geojson(&geojson::Value::Polygon(vec![coords])).unwrap()
}

use std::collections::BTreeSet;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::exec::{self, Exec};
use crate::geo::{orientation, GeoPoint, MultiPolygon, Polygon, Ring, METERS_PER_DEGREE};

use super::contour::{self, Bitmap, CornerRing};
use super::graph::{nearest_node, RoadGraph};
use super::reach::{reachable_set, ReachResult};
use super::RoutingError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum IsochroneMode {
    #[default]
    ConcaveGrid,
    ConvexHull,
}

impl IsochroneMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            IsochroneMode::ConcaveGrid => "concave-grid",
            IsochroneMode::ConvexHull => "convex-hull",
        }
    }
}

impl FromStr for IsochroneMode {
    type Err = RoutingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "concave-grid" => Ok(IsochroneMode::ConcaveGrid),
            "convex-hull" => Ok(IsochroneMode::ConvexHull),
            other => Err(RoutingError::InvalidConfig(format!("unknown isochrone mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IsochroneConfig {
    /// Travel-time budget in seconds.
    pub budget: f64,
    /// Grid cell edge in meters.
    pub cell_size: f64,
    pub mode: IsochroneMode,
    /// Maximum distance in meters between the origin and its snapped node.
    pub snap_radius: f64,
    /// Occupied-cell dilation in cells.
    pub dilation: u32,
}

impl Default for IsochroneConfig {
    fn default() -> Self {
        Self {
            budget: 3600.0,
            cell_size: 1000.0,
            mode: IsochroneMode::ConcaveGrid,
            snap_radius: 5000.0,
            dilation: 1,
        }
    }
}

impl IsochroneConfig {
    pub fn validate(&self) -> Result<(), RoutingError> {
        if !(self.budget > 0.0 && self.budget.is_finite()) {
            return Err(RoutingError::InvalidConfig(format!("budget must be > 0, got {}", self.budget)));
        }
        if !(self.cell_size > 0.0 && self.cell_size.is_finite()) {
            return Err(RoutingError::InvalidConfig(format!(
                "cell_size must be > 0, got {}",
                self.cell_size
            )));
        }
        if !(self.snap_radius >= 0.0) {
            return Err(RoutingError::InvalidConfig(format!(
                "snap_radius must be >= 0, got {}",
                self.snap_radius
            )));
        }
        Ok(())
    }
}

/// Isochrone geometry together with the search that produced it.
#[derive(Debug, Clone)]
pub struct Isochrone {
    pub geometry: MultiPolygon,
    pub reach: ReachResult,
}

/// Grid anchored so the origin sits at the centre of cell (0, 0). Anchoring
/// on the origin (not on the data bbox) keeps cell identities stable across
/// budgets.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CellGrid {
    anchor_lon: f64,
    anchor_lat: f64,
    dlon: f64,
    dlat: f64,
}

impl CellGrid {
    pub fn new(origin: &GeoPoint, cell_size_m: f64) -> Self {
        let dlat = cell_size_m / METERS_PER_DEGREE;
        let dlon = dlat / origin.lat().to_radians().cos().max(1e-6);
        Self {
            anchor_lon: origin.lon() - dlon / 2.0,
            anchor_lat: origin.lat() - dlat / 2.0,
            dlon,
            dlat,
        }
    }

    fn x(&self, i: i64) -> f64 {
        self.anchor_lon + i as f64 * self.dlon
    }

    fn y(&self, j: i64) -> f64 {
        self.anchor_lat + j as f64 * self.dlat
    }

    pub fn corner(&self, i: i64, j: i64) -> GeoPoint {
        GeoPoint::raw(self.x(i), self.y(j))
    }

    fn axis_cell(v: f64, start: f64, step: f64, at: impl Fn(i64) -> f64) -> i64 {
        let mut i = ((v - start) / step).floor() as i64;
        // agree exactly with the corner coordinates emitted for polygons
        while at(i) > v {
            i -= 1;
        }
        while at(i + 1) <= v {
            i += 1;
        }
        i
    }

    pub fn cell_of(&self, p: &GeoPoint) -> (i64, i64) {
        (
            Self::axis_cell(p.lon(), self.anchor_lon, self.dlon, |i| self.x(i)),
            Self::axis_cell(p.lat(), self.anchor_lat, self.dlat, |j| self.y(j)),
        )
    }

    /// Cells crossed by the segment `a → b` for parameters `t ∈ [0, t_end]`.
    /// The crossing parameters depend only on `a` and `b`, so a shorter
    /// `t_end` always yields a prefix of a longer one.
    pub fn traverse(&self, a: &GeoPoint, b: &GeoPoint, t_end: f64, cells: &mut Vec<(i64, i64)>) {
        let (mut i, mut j) = self.cell_of(a);
        cells.push((i, j));
        let (ddx, ddy) = (b.lon() - a.lon(), b.lat() - a.lat());
        let (sx, sy) = (ddx.signum() as i64, ddy.signum() as i64);
        let next_t = |step: i64, k: i64, d: f64, origin: f64, at: &dyn Fn(i64) -> f64| {
            if d == 0.0 {
                f64::INFINITY
            } else {
                (at(k + if step > 0 { 1 } else { 0 }) - origin) / d
            }
        };
        let xa = |k: i64| self.x(k);
        let ya = |k: i64| self.y(k);
        loop {
            let tx = next_t(sx, i, ddx, a.lon(), &xa);
            let ty = next_t(sy, j, ddy, a.lat(), &ya);
            let t = tx.min(ty);
            if !(t <= t_end) {
                break;
            }
            if tx <= ty {
                i += sx;
            }
            if ty <= tx {
                j += sy;
            }
            cells.push((i, j));
        }
    }
}

fn collect_points(r: &ReachResult, g: &RoadGraph) -> Vec<GeoPoint> {
    r.arrivals
        .keys()
        .filter_map(|id| g.point(*id))
        .chain(r.frontier_points.iter().copied())
        .collect()
}

/// Grid cells covered by reached nodes, frontier points and the travelled
/// portion of every arc leaving a reached node.
pub(crate) fn occupied_cells(
    r: &ReachResult,
    g: &RoadGraph,
    grid: &CellGrid,
    exec: Exec,
) -> BTreeSet<(i64, i64)> {
    let reached: Vec<(usize, f64)> = r
        .arrivals
        .iter()
        .filter_map(|(id, t)| g.index_of(*id).map(|i| (i, *t)))
        .collect();
    let per_node = exec::map(&reached, exec, |&(u, arrival)| {
        let pu = g.point_at(u);
        let mut cells = vec![grid.cell_of(&pu)];
        for arc in g.arcs(u) {
            let t_end = ((r.budget - arrival) / arc.seconds).min(1.0);
            if t_end > 0.0 {
                grid.traverse(&pu, &g.point_at(arc.target), t_end, &mut cells);
            }
        }
        cells
    });
    per_node
        .into_iter()
        .flatten()
        .chain(r.frontier_points.iter().map(|p| grid.cell_of(p)))
        .collect()
}

fn corner_ring(grid: &CellGrid, offset: (i64, i64), ring: &CornerRing) -> Ring {
    Ring::new(
        ring.iter()
            .map(|&(x, y)| grid.corner(x + offset.0, y + offset.1))
            .collect(),
    )
    .expect("traced rings are closed with distinct consecutive corners")
}

fn concave_grid(r: &ReachResult, g: &RoadGraph, cfg: &IsochroneConfig, origin: &GeoPoint, exec: Exec) -> MultiPolygon {
    let grid = CellGrid::new(origin, cfg.cell_size);
    let cells = occupied_cells(r, g, &grid, exec);
    let margin = 1 + cfg.dilation as i64;
    let (min_i, max_i) = cells.iter().fold((i64::MAX, i64::MIN), |(lo, hi), c| (lo.min(c.0), hi.max(c.0)));
    let (min_j, max_j) = cells.iter().fold((i64::MAX, i64::MIN), |(lo, hi), c| (lo.min(c.1), hi.max(c.1)));
    let offset = (min_i - margin, min_j - margin);
    let width = (max_i - min_i + 1 + 2 * margin) as usize;
    let height = (max_j - min_j + 1 + 2 * margin) as usize;

    let mut bitmap = Bitmap::new(width, height);
    for (i, j) in &cells {
        bitmap.set((i - offset.0) as usize, (j - offset.1) as usize);
    }
    let bitmap = bitmap.dilate(cfg.dilation as usize);

    let polygons = contour::trace(&bitmap)
        .into_iter()
        .map(|p| {
            Polygon::new(
                corner_ring(&grid, offset, &p.exterior),
                p.holes.iter().map(|h| corner_ring(&grid, offset, h)).collect(),
            )
            .expect("holes are enclosed by their exterior")
        })
        .collect();
    MultiPolygon::new(polygons).expect("at least one occupied cell")
}

/// Andrew's monotone chain; returns the counter-clockwise hull without repeating the first point.
fn convex_hull(points: &[GeoPoint]) -> Vec<GeoPoint> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.lon().total_cmp(&b.lon()).then(a.lat().total_cmp(&b.lat())));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<GeoPoint> = Vec::with_capacity(pts.len() * 2);
    for pass in [pts.clone(), pts.iter().rev().copied().collect()] {
        let base = hull.len();
        for p in pass {
            while hull.len() >= base + 2 && orientation(&hull[hull.len() - 2], &hull[hull.len() - 1], &p) <= 0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Rectangle of width `cell_size` around the segment a–b (a square when a = b).
fn inflate_segment(a: &GeoPoint, b: &GeoPoint, cell_size: f64, origin_lat: f64) -> Vec<GeoPoint> {
    let cos = origin_lat.to_radians().cos().max(1e-6);
    let half = cell_size / 2.0;
    let (mx, my) = ((b.lon() - a.lon()) * cos * METERS_PER_DEGREE, (b.lat() - a.lat()) * METERS_PER_DEGREE);
    let len = (mx * mx + my * my).sqrt();
    let to_deg = |x: f64, y: f64| (x / (METERS_PER_DEGREE * cos), y / METERS_PER_DEGREE);
    if len == 0.0 {
        let (hx, hy) = to_deg(half, half);
        return vec![
            GeoPoint::raw(a.lon() - hx, a.lat() - hy),
            GeoPoint::raw(a.lon() + hx, a.lat() - hy),
            GeoPoint::raw(a.lon() + hx, a.lat() + hy),
            GeoPoint::raw(a.lon() - hx, a.lat() + hy),
        ];
    }
    let (nx, ny) = to_deg(-my / len * half, mx / len * half);
    vec![
        GeoPoint::raw(a.lon() - nx, a.lat() - ny),
        GeoPoint::raw(b.lon() - nx, b.lat() - ny),
        GeoPoint::raw(b.lon() + nx, b.lat() + ny),
        GeoPoint::raw(a.lon() + nx, a.lat() + ny),
    ]
}

fn convex_hull_polygon(points: &[GeoPoint], cfg: &IsochroneConfig, origin: &GeoPoint) -> MultiPolygon {
    let mut hull = convex_hull(points);
    if hull.len() < 3 {
        let a = hull[0];
        let b = *hull.last().unwrap();
        hull = inflate_segment(&a, &b, cfg.cell_size, origin.lat());
    }
    hull.push(hull[0]);
    let ring = Ring::new(hull).expect("hull ring is closed and deduplicated");
    Polygon::new(ring, vec![]).expect("no holes").into()
}

pub fn build_isochrone(
    r: &ReachResult,
    g: &RoadGraph,
    cfg: &IsochroneConfig,
    exec: Exec,
) -> Result<MultiPolygon, RoutingError> {
    if !(cfg.cell_size > 0.0 && cfg.cell_size.is_finite()) {
        return Err(RoutingError::InvalidConfig(format!("cell_size must be > 0, got {}", cfg.cell_size)));
    }
    let origin = g.point(r.origin_node).ok_or(RoutingError::UnknownSource(r.origin_node))?;
    Ok(match cfg.mode {
        IsochroneMode::ConcaveGrid => concave_grid(r, g, cfg, &origin, exec),
        IsochroneMode::ConvexHull => convex_hull_polygon(&collect_points(r, g), cfg, &origin),
    })
}

/// Snap, search and build in one step.
pub fn compute_isochrone(
    g: &RoadGraph,
    origin: &GeoPoint,
    cfg: &IsochroneConfig,
    exec: Exec,
) -> Result<Isochrone, RoutingError> {
    let snapped = nearest_node(g, origin, cfg.snap_radius, exec)?;
    let reach = reachable_set(g, snapped.id, cfg.budget)?;
    let geometry = build_isochrone(&reach, g, cfg, exec)?;
    Ok(Isochrone { geometry, reach })
}

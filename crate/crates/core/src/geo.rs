//! Coordinates, polygon types and the planar predicates used by routing and
//! county intersection.
//!
//! All predicates treat lon/lat degrees as a plane. At county scale the
//! distortion is small and it is left uncorrected. Orientation signs come
//! from Shewchuk's adaptive `orient2d`, so collinear and touching cases are
//! classified exactly for the given `f64` inputs.

use serde::Serialize;
use thiserror::Error;

/// Mean Earth radius used by the haversine distance.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Length of one degree of latitude on the haversine sphere, in meters.
pub const METERS_PER_DEGREE: f64 = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeoError {
    #[error("latitude {0} outside [-90, 90]")]
    LatitudeOutOfRange(f64),
    #[error("longitude {0} outside [-180, 180]")]
    LongitudeOutOfRange(f64),
    #[error("ring has {0} points, at least 4 are required")]
    RingTooShort(usize),
    #[error("ring is not closed (first point differs from last)")]
    RingNotClosed,
    #[error("ring repeats point at index {0}")]
    RepeatedPoint(usize),
    #[error("hole {0} extends outside the exterior bounding box")]
    HoleOutsideExterior(usize),
    #[error("multipolygon has no polygons")]
    EmptyMultiPolygon,
    #[error("bounding box has min > max")]
    InvertedBBox,
    #[error("expected Polygon or MultiPolygon geometry, got {0}")]
    UnsupportedGeometry(String),
    #[error("position needs at least two coordinates")]
    ShortPosition,
}

/// A WGS84 position in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeoPoint {
    lon: f64,
    lat: f64,
}

impl GeoPoint {
    pub fn new(lon: f64, lat: f64) -> Result<Self, GeoError> {
        // NaN fails both range checks.
        if !(-90.0..=90.0).contains(&lat) {
            return Err(GeoError::LatitudeOutOfRange(lat));
        }
        if !(-180.0..=180.0).contains(&lon) {
            return Err(GeoError::LongitudeOutOfRange(lon));
        }
        Ok(Self { lon, lat })
    }

    /// Builds a point from values the caller has already range-checked
    /// (interpolations between valid points, grid corners near a valid origin).
    pub(crate) fn raw(lon: f64, lat: f64) -> Self {
        debug_assert!(lon.is_finite() && lat.is_finite());
        Self { lon, lat }
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    /// Linear interpolation in degree space; `t = 0` is `self`, `t = 1` is `other`.
    pub fn lerp(&self, other: &GeoPoint, t: f64) -> GeoPoint {
        GeoPoint::raw(
            self.lon + (other.lon - self.lon) * t,
            self.lat + (other.lat - self.lat) * t,
        )
    }

    fn coord(&self) -> robust::Coord<f64> {
        robust::Coord {
            x: self.lon,
            y: self.lat,
        }
    }
}

/// A closed linear ring: at least four points, first equals last.
#[derive(Debug, Clone, PartialEq)]
pub struct Ring {
    points: Vec<GeoPoint>,
}

impl Ring {
    pub fn new(points: Vec<GeoPoint>) -> Result<Self, GeoError> {
        if points.len() < 4 {
            return Err(GeoError::RingTooShort(points.len()));
        }
        if points.first() != points.last() {
            return Err(GeoError::RingNotClosed);
        }
        if let Some(i) = points.windows(2).position(|w| w[0] == w[1]) {
            return Err(GeoError::RepeatedPoint(i + 1));
        }
        Ok(Self { points })
    }

    /// Lenient constructor for external data: drops consecutive duplicates and
    /// closes the ring if needed, then validates.
    pub fn from_loose(mut points: Vec<GeoPoint>) -> Result<Self, GeoError> {
        points.dedup();
        if points.len() > 1 && points.first() != points.last() {
            points.push(points[0]);
        }
        Self::new(points)
    }

    pub fn points(&self) -> &[GeoPoint] {
        &self.points
    }

    /// Consecutive point pairs, including the closing edge.
    pub fn edges(&self) -> impl Iterator<Item = (GeoPoint, GeoPoint)> + '_ {
        self.points.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn bbox(&self) -> BBox {
        BBox::around(self.points.iter())
    }

    /// Shoelace area in square degrees; positive for counter-clockwise rings.
    pub fn signed_area(&self) -> f64 {
        let origin = self.points[0];
        self.edges()
            .map(|(a, b)| {
                (a.lon - origin.lon) * (b.lat - origin.lat)
                    - (b.lon - origin.lon) * (a.lat - origin.lat)
            })
            .sum::<f64>()
            / 2.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    exterior: Ring,
    holes: Vec<Ring>,
}

impl Polygon {
    pub fn new(exterior: Ring, holes: Vec<Ring>) -> Result<Self, GeoError> {
        let outer = exterior.bbox();
        if let Some(i) = holes.iter().position(|h| !outer.contains_bbox(&h.bbox())) {
            return Err(GeoError::HoleOutsideExterior(i));
        }
        Ok(Self { exterior, holes })
    }

    pub fn exterior(&self) -> &Ring {
        &self.exterior
    }

    pub fn holes(&self) -> &[Ring] {
        &self.holes
    }

    pub fn rings(&self) -> impl Iterator<Item = &Ring> {
        std::iter::once(&self.exterior).chain(self.holes.iter())
    }

    pub fn bbox(&self) -> BBox {
        self.exterior.bbox()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiPolygon {
    polygons: Vec<Polygon>,
}

impl MultiPolygon {
    pub fn new(polygons: Vec<Polygon>) -> Result<Self, GeoError> {
        if polygons.is_empty() {
            return Err(GeoError::EmptyMultiPolygon);
        }
        Ok(Self { polygons })
    }

    pub fn polygons(&self) -> &[Polygon] {
        &self.polygons
    }

    /// Shifts every vertex by a fixed offset (no range checks; planar use only).
    pub fn translated(&self, dlon: f64, dlat: f64) -> MultiPolygon {
        let shift = |r: &Ring| Ring {
            points: r
                .points
                .iter()
                .map(|p| GeoPoint::raw(p.lon + dlon, p.lat + dlat))
                .collect(),
        };
        MultiPolygon {
            polygons: self
                .polygons
                .iter()
                .map(|p| Polygon {
                    exterior: shift(&p.exterior),
                    holes: p.holes.iter().map(shift).collect(),
                })
                .collect(),
        }
    }
}

impl From<Polygon> for MultiPolygon {
    fn from(p: Polygon) -> Self {
        MultiPolygon { polygons: vec![p] }
    }
}

fn ring_from_positions(positions: &[geojson::Position]) -> Result<Ring, GeoError> {
    let points = positions
        .iter()
        .map(|p| match p.as_slice() {
            [lon, lat, ..] => GeoPoint::new(*lon, *lat),
            _ => Err(GeoError::ShortPosition),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ring::from_loose(points)
}

fn polygon_from_rings(rings: &geojson::PolygonType) -> Result<Polygon, GeoError> {
    let (exterior, holes) = rings.split_first().ok_or(GeoError::RingTooShort(0))?;
    Polygon::new(
        ring_from_positions(exterior)?,
        holes.iter().map(|h| ring_from_positions(h)).collect::<Result<_, _>>()?,
    )
}

impl MultiPolygon {
    /// Accepts GeoJSON Polygon and MultiPolygon values.
    pub fn from_geojson(value: &geojson::Value) -> Result<Self, GeoError> {
        match value {
            geojson::Value::Polygon(rings) => Ok(polygon_from_rings(rings)?.into()),
            geojson::Value::MultiPolygon(polys) => {
                MultiPolygon::new(polys.iter().map(polygon_from_rings).collect::<Result<_, _>>()?)
            }
            other => Err(GeoError::UnsupportedGeometry(other.type_name().to_string())),
        }
    }

    pub fn to_geojson(&self) -> geojson::Geometry {
        let ring = |r: &Ring| r.points.iter().map(|p| vec![p.lon, p.lat]).collect::<Vec<_>>();
        geojson::Geometry::new(geojson::Value::MultiPolygon(
            self.polygons
                .iter()
                .map(|p| p.rings().map(ring).collect())
                .collect(),
        ))
    }
}

/// Axis-aligned bounds in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BBox {
    min_lon: f64,
    min_lat: f64,
    max_lon: f64,
    max_lat: f64,
}

impl BBox {
    pub fn new(min_lon: f64, min_lat: f64, max_lon: f64, max_lat: f64) -> Result<Self, GeoError> {
        if !(min_lon <= max_lon && min_lat <= max_lat) {
            return Err(GeoError::InvertedBBox);
        }
        Ok(Self {
            min_lon,
            min_lat,
            max_lon,
            max_lat,
        })
    }

    /// Bounds of a non-empty point sequence.
    pub(crate) fn around<'a>(mut points: impl Iterator<Item = &'a GeoPoint>) -> BBox {
        let first = points.next().expect("bbox of empty point set");
        let mut b = BBox {
            min_lon: first.lon,
            min_lat: first.lat,
            max_lon: first.lon,
            max_lat: first.lat,
        };
        for p in points {
            b.min_lon = b.min_lon.min(p.lon);
            b.min_lat = b.min_lat.min(p.lat);
            b.max_lon = b.max_lon.max(p.lon);
            b.max_lat = b.max_lat.max(p.lat);
        }
        b
    }

    pub fn min_lon(&self) -> f64 {
        self.min_lon
    }
    pub fn min_lat(&self) -> f64 {
        self.min_lat
    }
    pub fn max_lon(&self) -> f64 {
        self.max_lon
    }
    pub fn max_lat(&self) -> f64 {
        self.max_lat
    }

    pub fn center(&self) -> (f64, f64) {
        (
            (self.min_lon + self.max_lon) / 2.0,
            (self.min_lat + self.max_lat) / 2.0,
        )
    }

    /// Closed-interval overlap; touching boxes intersect.
    pub fn intersects(&self, other: &BBox) -> bool {
        self.min_lon <= other.max_lon
            && other.min_lon <= self.max_lon
            && self.min_lat <= other.max_lat
            && other.min_lat <= self.max_lat
    }

    pub fn contains_point(&self, p: &GeoPoint) -> bool {
        (self.min_lon..=self.max_lon).contains(&p.lon) && (self.min_lat..=self.max_lat).contains(&p.lat)
    }

    pub fn contains_bbox(&self, other: &BBox) -> bool {
        self.min_lon <= other.min_lon
            && self.min_lat <= other.min_lat
            && other.max_lon <= self.max_lon
            && other.max_lat <= self.max_lat
    }

    pub fn union(&self, other: &BBox) -> BBox {
        BBox {
            min_lon: self.min_lon.min(other.min_lon),
            min_lat: self.min_lat.min(other.min_lat),
            max_lon: self.max_lon.max(other.max_lon),
            max_lat: self.max_lat.max(other.max_lat),
        }
    }

    fn of_segment(a: &GeoPoint, b: &GeoPoint) -> BBox {
        BBox {
            min_lon: a.lon.min(b.lon),
            min_lat: a.lat.min(b.lat),
            max_lon: a.lon.max(b.lon),
            max_lat: a.lat.max(b.lat),
        }
    }
}

/// Tight bounds over all exterior vertices.
pub fn bbox_of(g: &MultiPolygon) -> BBox {
    g.polygons
        .iter()
        .map(Polygon::bbox)
        .reduce(|a, b| a.union(&b))
        .expect("multipolygon is non-empty")
}

/// Sign of the turn a→b→c: positive counter-clockwise, negative clockwise, zero collinear.
pub(crate) fn orientation(a: &GeoPoint, b: &GeoPoint, c: &GeoPoint) -> i8 {
    let det = robust::orient2d(a.coord(), b.coord(), c.coord());
    if det > 0.0 {
        1
    } else if det < 0.0 {
        -1
    } else {
        0
    }
}

/// `p` lies on the closed segment a–b.
fn on_segment(p: &GeoPoint, a: &GeoPoint, b: &GeoPoint) -> bool {
    orientation(a, b, p) == 0 && BBox::of_segment(a, b).contains_point(p)
}

/// True iff the closed segments a1–a2 and b1–b2 share at least one point.
pub fn segments_intersect(a1: &GeoPoint, a2: &GeoPoint, b1: &GeoPoint, b2: &GeoPoint) -> bool {
    let o1 = orientation(a1, a2, b1);
    let o2 = orientation(a1, a2, b2);
    let o3 = orientation(b1, b2, a1);
    let o4 = orientation(b1, b2, a2);

    if o1 != o2 && o3 != o4 {
        return true;
    }
    (o1 == 0 && BBox::of_segment(a1, a2).contains_point(b1))
        || (o2 == 0 && BBox::of_segment(a1, a2).contains_point(b2))
        || (o3 == 0 && BBox::of_segment(b1, b2).contains_point(a1))
        || (o4 == 0 && BBox::of_segment(b1, b2).contains_point(a2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Location {
    Inside,
    Boundary,
    Outside,
}

/// Even-odd ray cast toward +lon, with on-edge points reported separately.
fn locate_in_ring(p: &GeoPoint, ring: &Ring) -> Location {
    let mut inside = false;
    for (a, b) in ring.edges() {
        if on_segment(p, &a, &b) {
            return Location::Boundary;
        }
        let upward = a.lat <= p.lat && p.lat < b.lat;
        let downward = b.lat <= p.lat && p.lat < a.lat;
        if (upward && orientation(&a, &b, p) > 0) || (downward && orientation(&a, &b, p) < 0) {
            inside = !inside;
        }
    }
    if inside {
        Location::Inside
    } else {
        Location::Outside
    }
}

/// Even-odd containment; points on any exterior or hole edge count as inside.
pub fn point_in_polygon(p: &GeoPoint, poly: &Polygon) -> bool {
    if !poly.bbox().contains_point(p) {
        return false;
    }
    match locate_in_ring(p, &poly.exterior) {
        Location::Outside => false,
        Location::Boundary => true,
        Location::Inside => poly
            .holes
            .iter()
            .all(|h| locate_in_ring(p, h) != Location::Inside),
    }
}

pub fn point_in_multipolygon(p: &GeoPoint, g: &MultiPolygon) -> bool {
    g.polygons.iter().any(|poly| point_in_polygon(p, poly))
}

fn edges_near<'a>(poly: &'a Polygon, window: &'a BBox) -> Vec<(GeoPoint, GeoPoint)> {
    poly.rings()
        .flat_map(Ring::edges)
        .filter(|(a, b)| BBox::of_segment(a, b).intersects(window))
        .collect()
}

fn polygon_pair_intersects(a: &Polygon, b: &Polygon) -> bool {
    let (ba, bb) = (a.bbox(), b.bbox());
    if !ba.intersects(&bb) {
        return false;
    }
    if a.rings().flat_map(|r| r.points.iter()).any(|v| point_in_polygon(v, b))
        || b.rings().flat_map(|r| r.points.iter()).any(|v| point_in_polygon(v, a))
    {
        return true;
    }
    let ea = edges_near(a, &bb);
    let eb = edges_near(b, &ba);
    ea.iter().any(|(a1, a2)| {
        let sa = BBox::of_segment(a1, a2);
        eb.iter()
            .any(|(b1, b2)| sa.intersects(&BBox::of_segment(b1, b2)) && segments_intersect(a1, a2, b1, b2))
    })
}

/// True iff the two areas share at least one point (boundaries included).
pub fn polygons_intersect(a: &MultiPolygon, b: &MultiPolygon) -> bool {
    if !bbox_of(a).intersects(&bbox_of(b)) {
        return false;
    }
    a.polygons
        .iter()
        .any(|pa| b.polygons.iter().any(|pb| polygon_pair_intersects(pa, pb)))
}

/// Haversine distance in meters.
pub fn great_circle_m(p: &GeoPoint, q: &GeoPoint) -> f64 {
    let (lat1, lat2) = (p.lat.to_radians(), q.lat.to_radians());
    let dlat = lat2 - lat1;
    let dlon = (q.lon - p.lon).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

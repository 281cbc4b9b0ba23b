//! County boundaries keyed by FIPS, with a uniform-grid bbox index for
//! isochrone intersection queries.

use std::collections::{BTreeMap, HashMap};
use std::io::Read;

use thiserror::Error;

use crate::exec::{self, Exec};
use crate::geo::{bbox_of, point_in_multipolygon, polygons_intersect, BBox, GeoError, GeoPoint, MultiPolygon};

/// Index cell edge in degrees.
pub const INDEX_CELL_DEG: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegionError {
    #[error("malformed GeoJSON: {0}")]
    MalformedGeoJSON(String),
    #[error("feature {feature}: missing property `{property}`")]
    MissingProperty { feature: usize, property: &'static str },
    #[error("feature {feature}: invalid FIPS `{value}`")]
    InvalidFips { feature: usize, value: String },
    #[error("feature {feature}: {source}")]
    InvalidGeometry { feature: usize, source: GeoError },
    #[error("duplicate FIPS {0}")]
    DuplicateFips(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountyBoundary {
    fips: String,
    name: String,
    state: String,
    geometry: MultiPolygon,
    bbox: BBox,
}

fn valid_fips(s: &str) -> bool {
    s.len() == 5 && s.bytes().all(|b| b.is_ascii_digit())
}

impl CountyBoundary {
    /// `fips` must already be five digits.
    pub fn new(fips: String, name: String, state: String, geometry: MultiPolygon) -> Option<Self> {
        valid_fips(&fips).then(|| Self {
            bbox: bbox_of(&geometry),
            fips,
            name,
            state,
            geometry,
        })
    }

    pub fn fips(&self) -> &str {
        &self.fips
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn state(&self) -> &str {
        &self.state
    }

    pub fn geometry(&self) -> &MultiPolygon {
        &self.geometry
    }

    pub fn bbox(&self) -> BBox {
        self.bbox
    }
}

type CellKey = (i64, i64);

fn cell_range(b: &BBox) -> impl Iterator<Item = CellKey> {
    let c = |v: f64| (v / INDEX_CELL_DEG).floor() as i64;
    let (x0, x1, y0, y1) = (c(b.min_lon()), c(b.max_lon()), c(b.min_lat()), c(b.max_lat()));
    (x0..=x1).flat_map(move |x| (y0..=y1).map(move |y| (x, y)))
}

#[derive(Debug, Clone)]
pub struct CountyBoundarySet {
    /// Sorted by FIPS, so ascending indices give ascending FIPS.
    counties: Vec<CountyBoundary>,
    by_fips: HashMap<String, usize>,
    cells: HashMap<CellKey, Vec<usize>>,
}

impl CountyBoundarySet {
    pub fn new(mut counties: Vec<CountyBoundary>) -> Result<Self, RegionError> {
        counties.sort_by(|a, b| a.fips.cmp(&b.fips));
        if let Some(w) = counties.windows(2).find(|w| w[0].fips == w[1].fips) {
            return Err(RegionError::DuplicateFips(w[0].fips.clone()));
        }
        let by_fips = counties.iter().enumerate().map(|(i, c)| (c.fips.clone(), i)).collect();
        let mut cells: HashMap<CellKey, Vec<usize>> = HashMap::new();
        for (i, c) in counties.iter().enumerate() {
            for key in cell_range(&c.bbox) {
                cells.entry(key).or_default().push(i);
            }
        }
        Ok(Self { counties, by_fips, cells })
    }

    pub fn len(&self) -> usize {
        self.counties.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counties.is_empty()
    }

    pub fn get(&self, fips: &str) -> Option<&CountyBoundary> {
        self.by_fips.get(fips).map(|&i| &self.counties[i])
    }

    pub fn counties(&self) -> &[CountyBoundary] {
        &self.counties
    }

    /// Index contents as `(cell x, cell y) → FIPS list`, cells of `INDEX_CELL_DEG`.
    pub fn index_cells(&self) -> BTreeMap<CellKey, Vec<&str>> {
        self.cells
            .iter()
            .map(|(k, v)| (*k, v.iter().map(|&i| self.counties[i].fips.as_str()).collect()))
            .collect()
    }

    fn candidates(&self, b: &BBox) -> Vec<usize> {
        let mut out: Vec<usize> = cell_range(b)
            .filter_map(|k| self.cells.get(&k))
            .flatten()
            .copied()
            .filter(|&i| self.counties[i].bbox.intersects(b))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Ascending FIPS of every county touching `iso`, index-pruned.
    pub fn counties_intersecting(&self, iso: &MultiPolygon, exec: Exec) -> Vec<String> {
        let candidates = self.candidates(&bbox_of(iso));
        exec::filter_map(&candidates, exec, |&i| {
            let c = &self.counties[i];
            polygons_intersect(&c.geometry, iso).then(|| c.fips.clone())
        })
    }

    /// Same contract as [`Self::counties_intersecting`] without the index.
    pub fn counties_intersecting_scan(&self, iso: &MultiPolygon) -> Vec<String> {
        self.counties
            .iter()
            .filter(|c| polygons_intersect(&c.geometry, iso))
            .map(|c| c.fips.clone())
            .collect()
    }

    /// First county in FIPS order containing `p`.
    pub fn county_for_point(&self, p: &GeoPoint) -> Option<&CountyBoundary> {
        let b = BBox::around(std::iter::once(p));
        self.candidates(&b)
            .into_iter()
            .map(|i| &self.counties[i])
            .find(|c| point_in_multipolygon(p, &c.geometry))
    }
}

fn fips_property(feature: usize, v: &serde_json::Value) -> Result<String, RegionError> {
    let invalid = || RegionError::InvalidFips {
        feature,
        value: v.to_string(),
    };
    let digits = match v {
        serde_json::Value::String(s) => s.trim().to_string(),
        serde_json::Value::Number(n) => n.as_u64().ok_or_else(invalid)?.to_string(),
        _ => return Err(invalid()),
    };
    if digits.is_empty() || digits.len() > 5 || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(invalid());
    }
    Ok(format!("{digits:0>5}"))
}

fn text_property(f: &geojson::Feature, feature: usize, property: &'static str) -> Result<String, RegionError> {
    match f.property(property) {
        Some(serde_json::Value::String(s)) => Ok(s.clone()),
        Some(v) if !v.is_null() => Ok(v.to_string()),
        _ => Err(RegionError::MissingProperty { feature, property }),
    }
}

/// Reads a GeoJSON FeatureCollection whose features carry `fips`, `name`
/// and `state` properties.
pub fn load_counties(mut src: impl Read) -> Result<CountyBoundarySet, RegionError> {
    let mut text = String::new();
    src.read_to_string(&mut text)
        .map_err(|e| RegionError::MalformedGeoJSON(e.to_string()))?;
    let fc = match text.parse::<geojson::GeoJson>() {
        Ok(geojson::GeoJson::FeatureCollection(fc)) => fc,
        Ok(_) => return Err(RegionError::MalformedGeoJSON("expected a FeatureCollection".into())),
        Err(e) => return Err(RegionError::MalformedGeoJSON(e.to_string())),
    };
    let mut counties = Vec::with_capacity(fc.features.len());
    for (i, f) in fc.features.iter().enumerate() {
        let fips = f
            .property("fips")
            .ok_or(RegionError::MissingProperty { feature: i, property: "fips" })
            .and_then(|v| fips_property(i, v))?;
        let name = text_property(f, i, "name")?;
        let state = text_property(f, i, "state")?;
        let geometry = f
            .geometry
            .as_ref()
            .ok_or(RegionError::MissingProperty { feature: i, property: "geometry" })?;
        let geometry = MultiPolygon::from_geojson(&geometry.value)
            .map_err(|source| RegionError::InvalidGeometry { feature: i, source })?;
        counties.push(CountyBoundary::new(fips, name, state, geometry).expect("fips validated"));
    }
    CountyBoundarySet::new(counties)
}

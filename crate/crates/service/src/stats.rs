//! The local-stats pipeline shared by the HTTP handler and the CLI: geocode,
//! isochrone, county intersection, aggregation and summary copy.

use nearme_core::epi::{aggregate, latest_totals, summary_sentence, Scope};
use nearme_core::geo::GeoPoint;
use nearme_core::geocode::{geocode_external, geocode_local, isochrone_external, GeocodeError, ProviderConfig, Source};
use nearme_core::routing::{compute_isochrone, RoutingError};
use nearme_core::Exec;
use serde::{Deserialize, Serialize};

use crate::error::ApiError;
use crate::snapshot::Snapshot;

/// Optional external backends; the local gazetteer and road graph are used
/// when these are absent.
#[derive(Debug, Clone, Default)]
pub struct Providers {
    pub client: reqwest::Client,
    pub geocoder: Option<ProviderConfig>,
    pub isochrone: Option<ProviderConfig>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LocalQuery {
    Coordinates { lat: f64, lon: f64 },
    Place(String),
}

impl LocalQuery {
    /// Exactly one of a `lat`/`lon` pair or a `place`.
    pub fn from_params(lat: Option<&str>, lon: Option<&str>, place: Option<&str>) -> Result<Self, ApiError> {
        let num = |name: &str, v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| ApiError::bad_query(format!("`{name}` is not a number: `{v}`")))
        };
        match (lat, lon, place) {
            (Some(lat), Some(lon), None) => Ok(LocalQuery::Coordinates {
                lat: num("lat", lat)?,
                lon: num("lon", lon)?,
            }),
            (None, None, Some(p)) if !p.trim().is_empty() => Ok(LocalQuery::Place(p.to_string())),
            (None, None, Some(_)) => Err(ApiError::bad_query("`place` is empty")),
            _ => Err(ApiError::bad_query("give either both `lat` and `lon`, or `place`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Origin {
    pub lat: f64,
    pub lon: f64,
    /// Gazetteer or provider label; absent for coordinate queries.
    pub matched_name: Option<String>,
    /// `coordinates`, `gazetteer` or `external`.
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountyStats {
    pub fips: String,
    pub name: String,
    pub state: String,
    /// Cumulative counts on the last date of the series.
    pub cases: i64,
    pub deaths: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub local_cases: i64,
    pub local_deaths: i64,
    pub state: String,
    pub state_cases: i64,
    pub state_deaths: i64,
    pub nation_cases: i64,
    pub nation_deaths: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trend {
    pub dates: Vec<String>,
    pub cases_rolling7: Vec<i64>,
    pub deaths_rolling7: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalStatsResponse {
    pub origin: Origin,
    pub isochrone: geojson::Geometry,
    pub counties: Vec<CountyStats>,
    pub totals: Totals,
    pub trend: Trend,
    pub summary: [String; 3],
    pub data_version: String,
}

/// The exact bytes served for a response, newline-terminated.
pub fn to_json_bytes(r: &LocalStatsResponse) -> Vec<u8> {
    let mut out = serde_json::to_vec(r).expect("response serializes");
    out.push(b'\n');
    out
}

async fn resolve_origin(snap: &Snapshot, p: &Providers, q: &LocalQuery) -> Result<Origin, ApiError> {
    let (point, matched_name, source) = match q {
        LocalQuery::Coordinates { lat, lon } => {
            let pt = GeoPoint::new(*lon, *lat).map_err(|e| ApiError::bad_query(e.to_string()))?;
            (pt, None, "coordinates")
        }
        LocalQuery::Place(text) => {
            let found = match (geocode_local(&snap.gazetteer, text), &p.geocoder) {
                (Err(GeocodeError::NotFound(_)), Some(cfg)) => geocode_external(&p.client, cfg, text).await,
                (r, _) => r,
            };
            let r = found.map_err(|e| match e {
                GeocodeError::EmptyQuery => ApiError::bad_query("`place` is empty"),
                GeocodeError::NotFound(_) | GeocodeError::NoMatch => ApiError::place_not_found(text),
                other => ApiError::upstream("GEOCODER_UNAVAILABLE", other),
            })?;
            let source = match r.source {
                Source::Gazetteer => "gazetteer",
                Source::External => "external",
            };
            (r.point, Some(r.matched_name), source)
        }
    };
    Ok(Origin {
        lat: point.lat(),
        lon: point.lon(),
        matched_name,
        source: source.to_string(),
    })
}

/// Runs the whole pipeline against one snapshot.
pub async fn local_stats(snap: &Snapshot, p: &Providers, q: &LocalQuery) -> Result<LocalStatsResponse, ApiError> {
    let origin = resolve_origin(snap, p, q).await?;
    let point = GeoPoint::new(origin.lon, origin.lat).map_err(|e| ApiError::bad_query(e.to_string()))?;

    let geometry = match &p.isochrone {
        Some(cfg) => isochrone_external(&p.client, cfg, &point, snap.isochrone.budget)
            .await
            .map_err(|e| ApiError::upstream("ISOCHRONE_UNAVAILABLE", e))?,
        None => {
            compute_isochrone(&snap.graph, &point, &snap.isochrone, Exec::preferred())
                .map_err(|e| match e {
                    RoutingError::OriginOffNetwork { .. } => ApiError::origin_off_network(e),
                    other => ApiError::internal(other),
                })?
                .geometry
        }
    };

    let hit = snap.counties.counties_intersecting(&geometry, Exec::preferred());
    let resolved = snap.aliases.resolve_all(hit.iter().map(String::as_str));
    let latest = |table: &nearme_core::epi::SeriesTable, fips: &str| {
        table.row(snap.aliases.resolve(fips)).map_or(0, |r| r.latest())
    };
    let counties: Vec<CountyStats> = hit
        .iter()
        .filter_map(|f| snap.counties.get(f))
        .map(|c| CountyStats {
            fips: c.fips().to_string(),
            name: c.name().to_string(),
            state: c.state().to_string(),
            cases: latest(&snap.cases, c.fips()),
            deaths: latest(&snap.deaths, c.fips()),
        })
        .collect();

    // the origin's own county names the state; failing that, the first county reached
    let state = snap
        .counties
        .county_for_point(&point)
        .map(|c| c.fips().to_string())
        .into_iter()
        .chain(hit.iter().cloned())
        .find_map(|f| snap.cases.row(snap.aliases.resolve(&f)).map(|r| r.state.clone()))
        .ok_or_else(ApiError::outside_coverage)?;

    let cases = aggregate(&snap.cases, &resolved).map_err(ApiError::internal)?;
    let deaths = aggregate(&snap.deaths, &resolved).map_err(ApiError::internal)?;
    let total = |table, scope| latest_totals(table, scope).map_err(ApiError::internal);
    let totals = Totals {
        local_cases: cases.cumulative_latest,
        local_deaths: deaths.cumulative_latest,
        state_cases: total(&snap.cases, Scope::State(&state))?,
        state_deaths: total(&snap.deaths, Scope::State(&state))?,
        nation_cases: total(&snap.cases, Scope::Nation)?,
        nation_deaths: total(&snap.deaths, Scope::Nation)?,
        state,
    };
    let summary = summary_sentence(
        totals.local_cases,
        totals.local_deaths,
        totals.state_cases,
        totals.state_deaths,
        &totals.state,
        totals.nation_cases,
        totals.nation_deaths,
    );

    Ok(LocalStatsResponse {
        origin,
        isochrone: geometry.to_geojson(),
        counties,
        totals,
        trend: Trend {
            dates: snap.cases.index().iso_dates(),
            cases_rolling7: cases.rolling7,
            deaths_rolling7: deaths.rolling7,
        },
        summary,
        data_version: snap.data_version.clone(),
    })
}

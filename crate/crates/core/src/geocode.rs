//! Place-name lookup: an offline gazetteer, plus HTTP clients for an external
//! forward geocoder and an openrouteservice-style isochrone endpoint.

use std::collections::HashMap;
use std::fmt;
use std::io::Read;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{GeoPoint, MultiPolygon, Polygon};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeocodeError {
    #[error("empty query")]
    EmptyQuery,
    #[error("no place matches `{0}`")]
    NotFound(String),
    #[error("gazetteer line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("provider request failed: {0}")]
    Network(String),
    #[error("provider rejected the API key")]
    Unauthorized,
    #[error("provider quota exceeded")]
    QuotaExceeded,
    #[error("provider returned no candidates")]
    NoMatch,
    #[error("malformed provider response: {0}")]
    MalformedResponse(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GazetteerEntry {
    pub name: String,
    pub admin1: String,
    pub point: GeoPoint,
    pub population: u64,
}

impl GazetteerEntry {
    pub fn label(&self) -> String {
        format!("{}, {}", self.name, self.admin1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Gazetteer,
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeocodeResult {
    pub point: GeoPoint,
    pub matched_name: String,
    pub source: Source,
}

/// Case-folds and collapses whitespace, including around commas.
pub fn normalize_key(s: &str) -> String {
    s.split(',')
        .map(|part| part.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase())
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    entries: Vec<GazetteerEntry>,
    by_full: HashMap<String, Vec<usize>>,
    by_name: HashMap<String, Vec<usize>>,
}

impl Gazetteer {
    pub fn new(entries: Vec<GazetteerEntry>) -> Self {
        let mut by_full: HashMap<String, Vec<usize>> = HashMap::new();
        let mut by_name: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, e) in entries.iter().enumerate() {
            by_full.entry(normalize_key(&e.label())).or_default().push(i);
            by_name.entry(normalize_key(&e.name)).or_default().push(i);
        }
        Self {
            entries,
            by_full,
            by_name,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[GazetteerEntry] {
        &self.entries
    }

    /// Highest population, then alphabetical admin1, then file order.
    fn best(&self, hits: &[usize]) -> &GazetteerEntry {
        let i = hits
            .iter()
            .copied()
            .min_by(|&a, &b| {
                let (ea, eb) = (&self.entries[a], &self.entries[b]);
                eb.population
                    .cmp(&ea.population)
                    .then_with(|| ea.admin1.cmp(&eb.admin1))
                    .then(a.cmp(&b))
            })
            .expect("index lists are never empty");
        &self.entries[i]
    }

    pub fn lookup(&self, query: &str) -> Option<&GazetteerEntry> {
        let key = normalize_key(query);
        self.by_full
            .get(&key)
            .or_else(|| self.by_name.get(&key))
            .map(|hits| self.best(hits))
    }
}

#[derive(Debug, Deserialize)]
struct GazetteerRow {
    name: String,
    admin1: String,
    lat: f64,
    lon: f64,
    population: u64,
}

/// Reads `name,admin1,lat,lon,population` rows.
pub fn load_gazetteer(src: impl Read) -> Result<Gazetteer, GeocodeError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(src);
    let header = rdr
        .headers()
        .map_err(|e| GeocodeError::MalformedRow { line: 1, reason: e.to_string() })?
        .clone();
    if header.iter().collect::<Vec<_>>() != ["name", "admin1", "lat", "lon", "population"] {
        return Err(GeocodeError::MalformedRow {
            line: 1,
            reason: "header must be name,admin1,lat,lon,population".into(),
        });
    }
    let mut entries = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| GeocodeError::MalformedRow {
            line: e.position().map_or(0, |p| p.line()),
            reason: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |reason: String| GeocodeError::MalformedRow { line, reason };
        let row: GazetteerRow = rec.deserialize(Some(&header)).map_err(|e| bad(e.to_string()))?;
        if row.name.is_empty() {
            return Err(bad("empty name".into()));
        }
        let point = GeoPoint::new(row.lon, row.lat).map_err(|e| bad(e.to_string()))?;
        entries.push(GazetteerEntry {
            name: row.name,
            admin1: row.admin1,
            point,
            population: row.population,
        });
    }
    Ok(Gazetteer::new(entries))
}

/// Exact lookup on "name, admin1", then on "name".
pub fn geocode_local(index: &Gazetteer, query: &str) -> Result<GeocodeResult, GeocodeError> {
    if query.trim().is_empty() {
        return Err(GeocodeError::EmptyQuery);
    }
    let e = index
        .lookup(query)
        .ok_or_else(|| GeocodeError::NotFound(query.trim().to_string()))?;
    Ok(GeocodeResult {
        point: e.point,
        matched_name: e.label(),
        source: Source::Gazetteer,
    })
}

/// Where the API key travels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "in", content = "name")]
pub enum KeyPlacement {
    Header(String),
    Query(String),
}

#[derive(Clone, PartialEq)]
pub struct ProviderConfig {
    pub base_url: String,
    pub api_key: String,
    pub key_placement: KeyPlacement,
    /// Per-attempt timeout.
    pub timeout: Duration,
    pub retry_count: u32,
}

impl fmt::Debug for ProviderConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProviderConfig")
            .field("base_url", &self.base_url)
            .field("api_key", &"<redacted>")
            .field("key_placement", &self.key_placement)
            .field("timeout", &self.timeout)
            .field("retry_count", &self.retry_count)
            .finish()
    }
}

impl ProviderConfig {
    pub fn new(base_url: impl Into<String>, api_key: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            api_key: api_key.into(),
            key_placement: KeyPlacement::Header("Authorization".into()),
            timeout: Duration::from_secs(10),
            retry_count: 2,
        }
    }

    /// Upper bound on the wall time of one client call.
    pub fn deadline(&self) -> Duration {
        self.timeout * (self.retry_count + 1)
    }

    fn authorize(&self, req: reqwest::RequestBuilder) -> reqwest::RequestBuilder {
        match &self.key_placement {
            KeyPlacement::Header(name) => req.header(name.as_str(), &self.api_key),
            KeyPlacement::Query(name) => req.query(&[(name.as_str(), self.api_key.as_str())]),
        }
    }
}

enum Attempt {
    Retry(GeocodeError),
    Fail(GeocodeError),
}

async fn attempt(req: reqwest::RequestBuilder) -> Result<String, Attempt> {
    let resp = req
        .send()
        .await
        .map_err(|e| Attempt::Retry(GeocodeError::Network(e.to_string())))?;
    let status = resp.status();
    match status.as_u16() {
        401 | 403 => return Err(Attempt::Fail(GeocodeError::Unauthorized)),
        429 => return Err(Attempt::Retry(GeocodeError::QuotaExceeded)),
        s if status.is_server_error() => return Err(Attempt::Retry(GeocodeError::Network(format!("HTTP {s}")))),
        s if !status.is_success() => return Err(Attempt::Fail(GeocodeError::Network(format!("HTTP {s}")))),
        _ => {}
    }
    resp.text()
        .await
        .map_err(|e| Attempt::Retry(GeocodeError::Network(e.to_string())))
}

/// Sends the request built by `make` with retries on transient failures,
/// giving up after [`ProviderConfig::deadline`].
async fn send_with_retries(
    cfg: &ProviderConfig,
    make: impl Fn() -> reqwest::RequestBuilder,
) -> Result<String, GeocodeError> {
    let run = async {
        let mut last = GeocodeError::Network("no attempt made".into());
        for n in 0..=cfg.retry_count {
            if n > 0 {
                tokio::time::sleep(Duration::from_millis(25 << n.min(5))).await;
            }
            match attempt(cfg.authorize(make()).timeout(cfg.timeout)).await {
                Ok(body) => return Ok(body),
                Err(Attempt::Fail(e)) => return Err(e),
                Err(Attempt::Retry(e)) => {
                    tracing::warn!(attempt = n + 1, error = %e, "provider request failed");
                    last = e;
                }
            }
        }
        Err(last)
    };
    tokio::time::timeout(cfg.deadline(), run)
        .await
        .unwrap_or_else(|_| Err(GeocodeError::Network("deadline exceeded".into())))
}

#[derive(Deserialize)]
struct Candidates {
    candidates: Vec<Candidate>,
}

#[derive(Deserialize)]
struct Candidate {
    lat: f64,
    lon: f64,
    label: String,
}

/// Forward geocode via `GET {base_url}?text=...`; the first candidate wins.
pub async fn geocode_external(
    client: &reqwest::Client,
    cfg: &ProviderConfig,
    query: &str,
) -> Result<GeocodeResult, GeocodeError> {
    if query.trim().is_empty() {
        return Err(GeocodeError::EmptyQuery);
    }
    let body = send_with_retries(cfg, || client.get(&cfg.base_url).query(&[("text", query.trim())])).await?;
    let parsed: Candidates =
        serde_json::from_str(&body).map_err(|e| GeocodeError::MalformedResponse(e.to_string()))?;
    let first = parsed.candidates.into_iter().next().ok_or(GeocodeError::NoMatch)?;
    let point =
        GeoPoint::new(first.lon, first.lat).map_err(|e| GeocodeError::MalformedResponse(e.to_string()))?;
    Ok(GeocodeResult {
        point,
        matched_name: first.label,
        source: Source::External,
    })
}

/// Isochrone via `POST {base_url}` with `{locations, range, range_type}`;
/// every polygon of the returned FeatureCollection goes into the result.
pub async fn isochrone_external(
    client: &reqwest::Client,
    cfg: &ProviderConfig,
    origin: &GeoPoint,
    budget_s: f64,
) -> Result<MultiPolygon, GeocodeError> {
    let body = serde_json::json!({
        "locations": [[origin.lon(), origin.lat()]],
        "range": [budget_s],
        "range_type": "time",
    });
    let text = send_with_retries(cfg, || client.post(&cfg.base_url).json(&body)).await?;
    parse_isochrone_response(&text)
}

pub fn parse_isochrone_response(text: &str) -> Result<MultiPolygon, GeocodeError> {
    let malformed = |m: String| GeocodeError::MalformedResponse(m);
    let fc = match text.parse::<geojson::GeoJson>() {
        Ok(geojson::GeoJson::FeatureCollection(fc)) => fc,
        Ok(_) => return Err(malformed("expected a FeatureCollection".into())),
        Err(e) => return Err(malformed(e.to_string())),
    };
    let mut polygons: Vec<Polygon> = Vec::new();
    for f in &fc.features {
        let g = f.geometry.as_ref().ok_or_else(|| malformed("feature without geometry".into()))?;
        let mp = MultiPolygon::from_geojson(&g.value).map_err(|e| malformed(e.to_string()))?;
        polygons.extend(mp.polygons().iter().cloned());
    }
    MultiPolygon::new(polygons).map_err(|e| malformed(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIXTURE: &str = "name,admin1,lat,lon,population
Austin,Texas,30.2672,-97.7431,961855
Springfield,Illinois,39.7817,-89.6501,114394
Springfield,Missouri,37.2090,-93.2923,169176
";

    fn gaz() -> Gazetteer {
        load_gazetteer(FIXTURE.as_bytes()).unwrap()
    }

    #[test]
    fn loads_three_rows() {
        let g = gaz();
        assert_eq!(g.len(), 3);
        assert_eq!(geocode_local(&g, "Springfield, Illinois").unwrap().matched_name, "Springfield, Illinois");
        assert_eq!(geocode_local(&g, "springfield, missouri").unwrap().matched_name, "Springfield, Missouri");
    }

    #[test]
    fn normalization() {
        let g = gaz();
        let a = geocode_local(&g, "Austin, Texas").unwrap();
        assert_eq!(a.point, GeoPoint::new(-97.7431, 30.2672).unwrap());
        assert_eq!(a.source, Source::Gazetteer);
        assert_eq!(geocode_local(&g, "  aUsTiN,   tExAs ").unwrap(), a);
        assert_eq!(geocode_local(&g, "austin ,texas").unwrap(), a);
        assert_eq!(normalize_key(" New   York ,NY "), "new york, ny");
    }

    #[test]
    fn name_only_prefers_population() {
        let g = gaz();
        assert_eq!(geocode_local(&g, "Springfield").unwrap().matched_name, "Springfield, Missouri");
    }

    #[test]
    fn ties_fall_back_to_admin1() {
        let src = "name,admin1,lat,lon,population\nX,Ohio,40,-83,10\nX,Iowa,42,-93,10\nX,Utah,39,-111,10\n";
        let g = load_gazetteer(src.as_bytes()).unwrap();
        assert_eq!(geocode_local(&g, "x").unwrap().matched_name, "X, Iowa");
    }

    #[test]
    fn errors() {
        let g = gaz();
        assert_eq!(geocode_local(&g, "Atlantis"), Err(GeocodeError::NotFound("Atlantis".into())));
        assert_eq!(geocode_local(&g, "   "), Err(GeocodeError::EmptyQuery));
        let bad = "name,admin1,lat,lon,population\nA,B,95,0,1\n";
        assert!(matches!(load_gazetteer(bad.as_bytes()), Err(GeocodeError::MalformedRow { line: 2, .. })));
        let bad = "name,admin1,lat,lon,population\nA,B,x,0,1\n";
        assert!(matches!(load_gazetteer(bad.as_bytes()), Err(GeocodeError::MalformedRow { .. })));
        let bad = "name,state,lat,lon,population\n";
        assert!(matches!(load_gazetteer(bad.as_bytes()), Err(GeocodeError::MalformedRow { line: 1, .. })));
    }

    #[test]
    fn api_key_is_redacted() {
        let cfg = ProviderConfig::new("http://x", "sekrit");
        assert!(!format!("{cfg:?}").contains("sekrit"));
        assert_eq!(cfg.deadline(), Duration::from_secs(30));
    }

    #[test]
    fn isochrone_response_parsing() {
        let ok = r#"{"type":"FeatureCollection","features":[{"type":"Feature","properties":{"value":3600},
            "geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1],[0,0]]]}}]}"#;
        assert_eq!(parse_isochrone_response(ok).unwrap().polygons().len(), 1);
        assert!(matches!(parse_isochrone_response("{}"), Err(GeocodeError::MalformedResponse(_))));
        let empty = r#"{"type":"FeatureCollection","features":[]}"#;
        assert!(matches!(parse_isochrone_response(empty), Err(GeocodeError::MalformedResponse(_))));
    }
}
